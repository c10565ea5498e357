//! Command-line driver: simulation, fitting, scoring, evaluation and training
//! over line-delimited trajectory files.

pub mod args;
pub mod commands;
pub mod table;

use std::io::Write;

use args::{Cli, Command};

pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate(a) => commands::cmd_simulate(a, out),
        Command::Fit(a) => commands::cmd_fit(a, out).map(drop),
        Command::Score(a) => commands::cmd_score(a, out).map(drop),
        Command::Shuffle(a) => commands::cmd_shuffle(a, out).map(drop),
        Command::Discriminate(a) => commands::cmd_discriminate(a, out).map(drop),
        Command::Relative(a) => commands::cmd_relative(a, out).map(drop),
        Command::Classify(a) => commands::cmd_classify(a, out).map(drop),
        Command::CompareDomains(a) => commands::cmd_compare_domains(a, out).map(drop),
        Command::Train(a) => commands::cmd_train(a, out).map(drop),
    }
}

/// 2 for numerical failures anywhere in the error chain, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<bbscore_core::Error>())
        .any(bbscore_core::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}
