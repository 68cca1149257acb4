use std::io::{IsTerminal, Write};

fn main() {
    let stdout = std::io::stdout();
    let color = spoofsim::color_enabled(stdout.is_terminal());
    let mut out = stdout.lock();
    let mut err = std::io::stderr().lock();
    let code = spoofsim::run(
        std::env::args_os(),
        &mut spoofsim::Io {
            out: &mut out,
            err: &mut err,
            color,
        },
    );
    let _ = out.flush();
    std::process::exit(code);
}
