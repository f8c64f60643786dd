fn main() {
    let code = match lmsm_cli::run_from_args(std::env::args_os()) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if !outcome.outputs.is_empty() {
                println!("{}", outcome.machine_line());
            }
            0
        }
        Err(err) => {
            eprintln!("{}", err.machine_line());
            err.exit_code()
        }
    };
    std::process::exit(code);
}
