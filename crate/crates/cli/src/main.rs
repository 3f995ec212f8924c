use clap::Parser;
use idvoi_cli::{run, Cli, Command, EXIT_DOMAIN};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // `serve` needs the async runtime; everything else is a plain call
    if let Ok(Cli {
        command: Command::Serve { port, log_dir },
    }) = Cli::try_parse_from(&args)
    {
        let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
        if let Err(e) = runtime.block_on(idvoi_cli::service::serve(port, log_dir)) {
            eprintln!("error: {e:#}");
            std::process::exit(EXIT_DOMAIN);
        }
        return;
    }
    let code = run(args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
