fn main() {
    std::process::exit(equity_auctions::cli::run(std::env::args()));
}
