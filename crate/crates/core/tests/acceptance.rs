//! One line per acceptance criterion. Set NOF1_ACNE_DIR to a directory
//! with participant1.csv and participant2.csv to run the replication.

use nof1_core::verify::{run_criterion, Status, VerifyConfig, CRITERIA};

fn main() {
    let cfg = VerifyConfig { acne_dir: std::env::var_os("NOF1_ACNE_DIR").map(Into::into), ..VerifyConfig::default() };
    let only: Option<Vec<u8>> = std::env::var("NOF1_CRITERIA").ok().map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, _) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let report = run_criterion(id, &cfg);
        println!("{report}");
        failed += (report.status == Status::Fail) as usize;
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
