mod common;

use proptest::prelude::*;
use siting_core::grid::{AggregationMode, GridPoint, LandType, Resource, WaterSource};
use siting_core::{Grid, GridSchema, SitingError};

use common::{cell, rng};
use rand::Rng;

const URBAN: Resource = Resource::Water(WaterSource::Urban);
const BARREN: Resource = Resource::Land(LandType::Barren);

fn load(text: &str) -> Result<Grid, SitingError> {
    Grid::from_csv_reader(text.as_bytes(), &GridSchema::default())
}

#[test]
fn four_row_csv() {
    let g =
        load("cell_id,x_km,y_km,water_urban\n0,5,5,1\n1,15,5,2\n2,5,15,3\n3,15,15,4\n").unwrap();
    assert_eq!(g.len(), 4);
    assert_eq!(g.cell(3).unwrap().available(URBAN), 4.0);
    assert_eq!(g.cell(2).unwrap().available(BARREN), 0.0);
}

#[test]
fn negative_row_is_named() {
    let err = load("cell_id,x_km,y_km,water_urban\n0,5,5,1\n1,15,5,-5\n").unwrap_err();
    match err {
        SitingError::MalformedRow { row, column, .. } => {
            assert_eq!(row, 2);
            assert_eq!(column, "water_urban");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn duplicate_and_unparseable_rejected() {
    assert!(matches!(
        load("cell_id,x_km,y_km\n0,5,5\n0,5,5\n"),
        Err(SitingError::DuplicateCell(0))
    ));
    assert!(matches!(
        load("cell_id,x_km,y_km,water_urban\n0,5,5,lots\n"),
        Err(SitingError::MalformedRow { .. })
    ));
}

#[test]
fn row_major_lookup_on_ten_by_ten() {
    let mut text = String::from("cell_id,x_km,y_km\n");
    for id in 0..100 {
        text += &format!("{id},{},{}\n", (id % 10) * 10 + 5, (id / 10) * 10 + 5);
    }
    let g = load(&text).unwrap();
    assert_eq!(g.cell_at(55.0, 55.0).unwrap().cell_id, 55);
    assert_eq!(g.cell_at(0.0, 0.0).unwrap().cell_id, 0);
    assert_eq!(g.cell_at(99.9, 99.9).unwrap().cell_id, 99);
    assert!(g.cell_at(100.1, 5.0).is_none());
    assert_eq!(g.cell_size_km(), 10.0);
}

fn two_by_two() -> Grid {
    Grid::new((0..4).map(|i| cell(i, 2)).collect(), Vec::new()).unwrap()
}

#[test]
fn aggregation_examples() {
    let mut g = two_by_two();
    let p = |x, y, v| GridPoint {
        x_km: x,
        y_km: y,
        layer: "water_urban".into(),
        value: v,
    };
    g.aggregate_points(&[p(15.0, 15.0, 7.0)], AggregationMode::Sum)
        .unwrap();
    assert_eq!(g.cell(3).unwrap().available(URBAN), 7.0);

    let mut g = two_by_two();
    g.aggregate_points(&[p(1.0, 1.0, 4.0), p(9.0, 9.0, 6.0)], AggregationMode::Mean)
        .unwrap();
    assert_eq!(g.cell(0).unwrap().available(URBAN), 5.0);

    let bad = GridPoint {
        x_km: 1.0,
        y_km: 1.0,
        layer: "unobtainium".into(),
        value: 1.0,
    };
    assert!(matches!(
        two_by_two().aggregate_points(&[bad], AggregationMode::Sum),
        Err(SitingError::UnknownLayer(_))
    ));
}

#[test]
fn aggregation_sum_matches_brute_force_total() {
    let mut r = rng(99);
    let mut g = Grid::new((0..100).map(|i| cell(i, 10)).collect(), Vec::new()).unwrap();
    // integer-valued points keep the oracle independent of summation order
    let points: Vec<GridPoint> = (0..1000)
        .map(|_| GridPoint {
            x_km: r.gen_range(0.0..100.0),
            y_km: r.gen_range(0.0..100.0),
            layer: "feed_msw".into(),
            value: r.gen_range(0..1000) as f64,
        })
        .collect();
    let report = g.aggregate_points(&points, AggregationMode::Sum).unwrap();
    assert_eq!(report.folded, 1000);
    assert_eq!(report.out_of_bounds, 0);
    let oracle: f64 = points.iter().map(|p| p.value).sum();
    let total: f64 = g
        .cells()
        .iter()
        .map(|c| c.available(Resource::Energy(siting_core::grid::EnergyCategory::Msw)))
        .sum();
    assert_eq!(total, oracle);
}

#[test]
fn out_of_bounds_points_are_counted() {
    let mut g = two_by_two();
    let p = GridPoint {
        x_km: 500.0,
        y_km: 5.0,
        layer: "water_urban".into(),
        value: 1.0,
    };
    let report = g.aggregate_points(&[p], AggregationMode::Sum).unwrap();
    assert_eq!((report.folded, report.out_of_bounds), (0, 1));
}

fn stocked() -> Grid {
    let cells = (0..4)
        .map(|i| {
            cell(i, 2)
                .with_available(URBAN, 100.0)
                .with_available(BARREN, 50.0)
        })
        .collect();
    Grid::new(cells, Vec::new()).unwrap()
}

#[test]
fn consume_examples() {
    let mut g = stocked();
    g.consume(0, &[(URBAN, 0.0), (BARREN, 0.0)]).unwrap();
    assert_eq!(g.cells(), stocked().cells());
    assert!(g.ledger().iter().all(|e| e.delta == 0.0));

    g.consume(0, &[(URBAN, 40.0)]).unwrap();
    assert_eq!(g.cell(0).unwrap().available(URBAN), 60.0);
    assert_eq!(g.cell(1).unwrap().available(URBAN), 100.0);
}

#[test]
fn consume_is_atomic_and_lists_every_shortfall() {
    let mut g = stocked();
    let before = g.cells().to_vec();
    let err = g.consume(1, &[(URBAN, 40.0), (BARREN, 80.0)]).unwrap_err();
    match &err {
        SitingError::Insufficient {
            cell_id,
            shortfalls,
        } => {
            assert_eq!(*cell_id, 1);
            assert_eq!(shortfalls.len(), 1);
            assert_eq!(shortfalls[0].resource, "land_barren");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(g.cells(), &before[..]);
    assert!(g.ledger().is_empty());

    let err = g.consume(1, &[(URBAN, 400.0), (BARREN, 80.0)]).unwrap_err();
    assert!(
        matches!(err, SitingError::Insufficient { ref shortfalls, .. } if shortfalls.len() == 2)
    );
}

#[test]
fn ledger_csv_header() {
    let mut g = stocked();
    g.begin_step(3);
    g.consume(2, &[(URBAN, 1.5)]).unwrap();
    let mut out = Vec::new();
    g.write_ledger_csv(&mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "step,cell_id,resource,delta\n3,2,water_urban,1.5\n"
    );
}

#[test]
fn csv_roundtrip() {
    let g = common::random_grid(&mut rng(4), 5, 4);
    let mut out = Vec::new();
    g.write_csv(&mut out).unwrap();
    let back = Grid::from_csv_reader(out.as_slice(), &GridSchema::default()).unwrap();
    assert_eq!(back.cells(), g.cells());
}

#[test]
fn schema_aliases() {
    let schema = GridSchema::default().with_alias("water_urban", "UrbanWater");
    let g = Grid::from_csv_reader(
        "cell_id,x_km,y_km,UrbanWater\n0,5,5,9\n".as_bytes(),
        &schema,
    )
    .unwrap();
    assert_eq!(g.cell(0).unwrap().available(URBAN), 9.0);
}

proptest! {
    #[test]
    fn conservation_nonnegativity_and_atomicity(
        seed in any::<u64>(),
        ops in prop::collection::vec((0u32..9, 0usize..14, 0.0f64..2e7, 0usize..14, 0.0f64..2e7), 1..60),
    ) {
        let mut g = common::random_grid(&mut rng(seed), 3, 3);
        for (step, (cell_id, r1, a1, r2, a2)) in ops.into_iter().enumerate() {
            g.begin_step(step as u32);
            let demands = [(Resource::ALL[r1], a1), (Resource::ALL[r2], a2)];
            let before_cells = g.cells().to_vec();
            let before_ledger = g.ledger().len();
            if g.consume(cell_id, &demands).is_err() {
                prop_assert_eq!(g.cells(), &before_cells[..]);
                prop_assert_eq!(g.ledger().len(), before_ledger);
            }
            for c in g.cells() {
                for r in Resource::ALL {
                    prop_assert!(c.available(r) >= 0.0);
                }
            }
        }
        let replayed = g.replay();
        for (c, a) in g.cells().iter().zip(&replayed) {
            prop_assert_eq!(c.availability(), a);
        }
        for c in g.cells() {
            for r in Resource::ALL {
                let debited: f64 = g
                    .ledger()
                    .iter()
                    .filter(|e| e.cell_id == c.cell_id && e.resource == r.column())
                    .map(|e| e.delta)
                    .sum();
                let ingested = g.ingested(c.cell_id).unwrap().get(r);
                prop_assert!(common::rel_eq(ingested - debited, c.available(r), 1e-9));
            }
        }
    }
}
