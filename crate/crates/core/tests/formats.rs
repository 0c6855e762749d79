use ariadne::sampler::{self, build_dataset, SamplerConfig, SamplerError};
use proptest::prelude::*;

const GOLDEN_RECORD: &str = include_str!("data/dataset_record.tsv");

#[test]
fn golden_dataset_record() {
    let records = build_dataset(&SamplerConfig::train(), 1, 5, 5, 1).unwrap();
    assert_eq!(
        format!("{}\n", sampler::format_record(&records[0])),
        GOLDEN_RECORD
    );
    assert_eq!(sampler::parse_records(GOLDEN_RECORD).unwrap(), records);
}

fn parse_error_line(text: &str) -> usize {
    match sampler::parse_records(text) {
        Err(SamplerError::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_records_report_their_line() {
    let good = GOLDEN_RECORD.trim_end();
    let fields: Vec<&str> = good.split('\t').collect();
    let with = |i: usize, v: &str| {
        let mut f = fields.clone();
        f[i] = v;
        format!("# header\n{}\n", f.join("\t"))
    };
    assert_eq!(
        parse_error_line(&format!("# header\n{}\n", fields[..5].join("\t"))),
        2
    );
    assert_eq!(parse_error_line(&with(3, "913d3842fac12fefaed3d47f")), 2);
    assert_eq!(parse_error_line(&with(3, &fields[3].to_uppercase())), 2);
    assert_eq!(parse_error_line(&with(4, "9,9")), 2);
    assert_eq!(parse_error_line(&with(6, "<|up|><|up|>")), 2);
    assert_eq!(parse_error_line(&with(7, "4")), 2);
    assert_eq!(parse_error_line(&with(8, "x")), 2);
    assert_eq!(
        parse_error_line(&format!(
            "{good}\n\n{}",
            with(0, "-1").trim_start_matches("# header\n")
        )),
        3
    );
    assert!(matches!(
        sampler::read_records("/nonexistent/data.tsv"),
        Err(SamplerError::Io(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dataset_file_round_trip(seed in any::<u64>(), test_profile in any::<bool>()) {
        let config = if test_profile { SamplerConfig::test() } else { SamplerConfig::train() };
        let records = build_dataset(&config, 20, 5, 5, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tsv");
        sampler::write_records(&records, &path).unwrap();
        prop_assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 20);
        prop_assert_eq!(sampler::read_records(&path).unwrap(), records);
    }
}
