#[test]
fn no_color_disables_styling() {
    std::env::remove_var("NO_COLOR");
    assert!(spoofsim::color_enabled(true));
    assert!(!spoofsim::color_enabled(false));
    std::env::set_var("NO_COLOR", "1");
    assert!(!spoofsim::color_enabled(true));

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut io = spoofsim::Io {
        out: &mut out,
        err: &mut err,
        color: true,
    };
    io.field("hit", 3).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "\x1b[1mhit:\x1b[0m 3\n");
}
