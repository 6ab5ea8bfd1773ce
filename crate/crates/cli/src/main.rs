// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(rmtchannel_cli::execute(std::env::args_os()));
}
