//! `mrboost` command-line entry point.

fn main() {
    mrboost::cli::main_exit()
}
