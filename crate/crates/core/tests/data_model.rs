use std::collections::BTreeSet;

use aircargo::data_model::{
    estimate_step_probs, estimate_type_probs, ingest_reader, write_records, ArrivalModel,
    BookingRecord, DropReason, SchemaOptions, StepNormalization,
};
use proptest::prelude::*;

fn record() -> impl Strategy<Value = BookingRecord> {
    (
        "[A-Z0-9]{1,8}",
        0i64..5_000_000,
        0i64..100_000,
        ("[A-Z]{3}", "[A-Z]{3}", "[a-z]{1,6}", "(GEN|PER|EXP|DGR)"),
        prop::collection::btree_set("[A-Z]{3}", 0..3),
        1u32..50,
        (
            0.0f64..100.0,
            0.0f64..5000.0,
            prop::option::of(0.0f64..100.0),
        ),
    )
        .prop_map(
            |(
                id,
                departure,
                lead,
                (origin, destination, agent, product),
                shc,
                pieces,
                (bkvol, bkwt, rcsvol),
            )| {
                BookingRecord {
                    booking_id: id,
                    booking_time: departure + 1_000_000 - lead,
                    departure_time: departure + 1_000_000,
                    origin,
                    destination,
                    agent,
                    product_type: product,
                    shipment_codes: shc,
                    pieces,
                    bkvol,
                    bkwt,
                    rcsvol,
                }
            },
        )
}

fn roundtrip(records: &[BookingRecord]) -> Vec<BookingRecord> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).unwrap();
    let (back, report) = ingest_reader(buf.as_slice(), &SchemaOptions::default()).unwrap();
    assert_eq!(report.total_dropped(), 0);
    back
}

proptest! {
    #[test]
    fn ingest_is_idempotent(records in prop::collection::vec(record(), 0..40)) {
        let once = roundtrip(&records);
        prop_assert_eq!(&once, &records);
        prop_assert_eq!(roundtrip(&once), once);
    }

    #[test]
    fn type_probs_sum_to_one(records in prop::collection::vec(record(), 1..60)) {
        let probs = estimate_type_probs(&records).unwrap();
        let total: f64 = probs.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(probs.values().all(|p| *p > 0.0));
    }

    #[test]
    fn step_probs_are_flat_within_intervals(
        records in prop::collection::vec(record(), 1..60),
        (steps, intervals) in prop_oneof![Just((12usize, 3usize)), Just((60, 6)), Just((8, 8)), Just((5, 1))],
    ) {
        prop_assume!(records.iter().any(|r| r.rcsvol.is_some()));
        let probs = estimate_step_probs(&records, steps, intervals).unwrap();
        prop_assert_eq!(probs.len(), steps);
        for block in probs.chunks(steps / intervals) {
            prop_assert!(block.iter().all(|p| *p == block[0]));
        }
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

const FIXTURE: &str = "\
booking_id,booking_time,departure_time,origin,destination,agent,product,shc,pieces,bkvol,bkwt,rcsvol
ok1,2024-03-01 08:00,2024-03-05 10:00,AMS,JFK,a1,GEN,PER;COL,3,1.5,250,1.7
ok2,2024-03-02 09:30,2024-03-05 10:00,AMS,JFK,a2,PER,,1,2.0,100,
late,2024-03-06 09:30,2024-03-05 10:00,AMS,JFK,a2,PER,,1,2.0,100,2.1
neg,2024-03-02 09:30,2024-03-05 10:00,AMS,JFK,a2,PER,,1,-2.0,100,2.1
nopieces,2024-03-02 09:30,2024-03-05 10:00,AMS,JFK,a2,PER,,0,2.0,100,2.1
noproduct,2024-03-02 09:30,2024-03-05 10:00,AMS,JFK,a2,,,1,2.0,100,2.1
badtime,yesterday,2024-03-05 10:00,AMS,JFK,a2,GEN,,1,2.0,100,2.1
short,2024-03-02 09:30,2024-03-05 10:00
";

#[test]
fn fixture_drop_counts() {
    let (records, report) = ingest_reader(FIXTURE.as_bytes(), &SchemaOptions::default()).unwrap();
    assert_eq!(report.rows_read, 8);
    assert_eq!(report.records_kept, 2);
    assert_eq!(report.dropped_for(DropReason::TimeOrder), 1);
    assert_eq!(report.dropped_for(DropReason::InvalidNumeric), 2);
    assert_eq!(report.dropped_for(DropReason::MissingField), 1);
    assert_eq!(report.dropped_for(DropReason::Unparseable), 2);
    assert_eq!(
        records[0].shipment_codes,
        BTreeSet::from(["COL".to_string(), "PER".to_string()])
    );
    assert_eq!(records[0].rcsvol, Some(1.7));
    assert_eq!(records[1].rcsvol, None);
    assert_eq!(records[0].minutes_before_departure(), 4 * 1440 + 120);
}

#[test]
fn missing_required_column_is_fatal() {
    let text =
        "booking_id,booking_time,departure_time,product\nx,2024-03-01 08:00,2024-03-05 10:00,GEN\n";
    assert!(ingest_reader(text.as_bytes(), &SchemaOptions::default()).is_err());
}

#[test]
fn arrival_model_from_fixture() {
    let (records, _) = ingest_reader(FIXTURE.as_bytes(), &SchemaOptions::default()).unwrap();
    let model = ArrivalModel::from_records(&records, 4, 2, StepNormalization::Shipments).unwrap();
    assert_eq!(model.type_names, vec!["GEN".to_string(), "PER".to_string()]);
    assert_eq!(model.type_probs, vec![0.5, 0.5]);
    // PER has no received volume and falls back to the global mean
    assert_eq!(model.mean_volumes, vec![1.7, 1.7]);
    assert_eq!(model.step_probs.iter().sum::<f64>(), 1.0);
}
