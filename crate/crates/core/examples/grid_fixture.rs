//! Prints the default synthetic street grid as network JSON.
//!
//! cargo run -p tripwise-core --example grid_fixture > crates/core/fixtures/denver_grid.json

use tripwise_core::fixtures::{grid_network, GridSpec};

fn main() {
    let net = grid_network(&GridSpec::default());
    println!(
        "{}",
        serde_json::to_string_pretty(&net.to_file()).expect("network serializes")
    );
}
