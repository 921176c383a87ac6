use lingdiv_core::eval::{aggregate, dialect_breakdown, Dialect, DialectPrediction, DiversityBlock, EvalRecord};

const MODELS: [&str; 9] = [
    "standard-medium",
    "standard-base",
    "standard-large",
    "diverse-medium",
    "diverse-base",
    "diverse-large",
    "combined-medium",
    "combined-base",
    "combined-large",
];

const STANDARD: &str = "\
BHTC 74.85 75.37 77.53 73.37 73.97 76.70 75.06 75.56 77.83
Korref 64.45 58.66 58.04 57.13 59.00 61.61 60.70 63.54 69.73
NERCid 83.35 83.83 86.48 80.19 75.50 83.34 81.33 83.39 84.97
NERCod 73.29 75.14 75.04 65.99 67.77 70.63 72.60 75.67 76.06
QNLI 69.61 73.25 74.23 70.73 70.73 71.01 69.19 71.15 72.96
WiC 67.69 70.57 70.07 68.86 70.33 70.14 69.07 69.55 70.86
XNLIeu-nat 67.31 71.28 74.93 61.89 66.72 64.52 66.51 67.95 72.79
POSud 94.85 95.61 96.27 94.06 95.42 95.38 94.46 95.86 95.97
POShis-nor 71.48 74.29 78.92 72.73 72.55 76.96 73.10 76.12 79.74";

const DIVERSE: &str = "\
BEC 69.87 66.05 68.10 69.43 69.82 70.10 68.87 70.02 69.40
Intent 75.31 77.46 77.80 77.34 75.50 79.70 75.22 76.84 78.04
Slot 76.73 78.95 77.01 76.93 78.26 76.01 78.02 75.75 78.61
Vaxx 61.60 63.06 65.97 64.03 66.67 68.46 66.13 65.77 67.44
XNLIeu-var 65.21 68.05 74.05 58.50 65.14 63.68 62.30 64.91 72.82
POShis 73.06 73.96 75.84 73.22 73.17 73.27 73.00 74.36 76.33";

const AVG_STANDARD: [f64; 9] = [74.10, 75.33, 76.83, 71.66, 72.44, 74.48, 73.56, 75.42, 77.88];
const AVG_DIVERSE: [f64; 9] = [70.30, 71.26, 73.13, 69.91, 71.43, 71.87, 70.59, 71.28, 73.77];
const AVG_OVERALL: [f64; 9] = [72.58, 73.70, 75.35, 70.96, 72.04, 73.43, 72.37, 73.76, 76.24];

fn records() -> Vec<EvalRecord> {
    let mut out = Vec::new();
    for (rows, block) in [(STANDARD, DiversityBlock::Standard), (DIVERSE, DiversityBlock::Diverse)] {
        for line in rows.lines() {
            let mut cols = line.split(' ');
            let task = cols.next().unwrap();
            for (model, score) in MODELS.iter().zip(cols) {
                out.push(EvalRecord { model: model.to_string(), task: task.into(), seed: 1, score: score.parse().unwrap(), block });
            }
        }
    }
    out
}

#[test]
fn every_column_reproduces_its_average_rows() {
    let report = aggregate(&records()).unwrap();
    assert_eq!(report.tasks.len(), 15);
    for (i, model) in MODELS.iter().enumerate() {
        let m = report.model(model).unwrap();
        assert!((m.avg_standard.unwrap() - AVG_STANDARD[i]).abs() <= 0.01, "{model} standard");
        assert!((m.avg_diverse.unwrap() - AVG_DIVERSE[i]).abs() <= 0.01, "{model} diverse");
        assert!((m.avg_overall - AVG_OVERALL[i]).abs() <= 0.01, "{model} overall");
    }
}

#[test]
fn overall_is_task_weighted() {
    let report = aggregate(&records()).unwrap();
    for m in &report.models {
        let weighted = (9.0 * m.avg_standard.unwrap() + 6.0 * m.avg_diverse.unwrap()) / 15.0;
        assert!((m.avg_overall - weighted).abs() < 1e-9);
    }
    for i in 0..9 {
        assert!(((9.0 * AVG_STANDARD[i] + 6.0 * AVG_DIVERSE[i]) / 15.0 - AVG_OVERALL[i]).abs() <= 0.01);
    }
}

#[test]
fn report_tsv_has_one_row_per_task_and_average() {
    let tsv = aggregate(&records()).unwrap().to_tsv();
    assert_eq!(tsv.lines().count(), 1 + 15 + 3);
    assert!(tsv.lines().last().unwrap().ends_with("\t76.24"));
}

// Correct-prediction counts out of 591 central, 240 western and 63
// navarrese items.
const DIALECT_COUNTS: [(&str, [usize; 3], [f64; 3]); 3] = [
    ("combined-large", [444, 173, 42], [75.13, 72.08, 66.67]),
    ("standard-large", [446, 174, 44], [75.47, 72.50, 69.84]),
    ("diverse-large", [382, 141, 39], [64.64, 58.75, 61.90]),
];

#[test]
fn dialect_table_matches_published_accuracies() {
    let mut preds = Vec::new();
    for (model, correct, _) in DIALECT_COUNTS {
        for ((dialect, total), ok) in [("central", 591), ("western", 240), ("navarrese", 63)].into_iter().zip(correct) {
            for i in 0..total {
                preds.push(DialectPrediction {
                    model: model.into(),
                    dialect: dialect.into(),
                    gold: "entailment".into(),
                    predicted: if i < ok { "entailment" } else { "contradiction" }.into(),
                });
            }
        }
    }
    let table = dialect_breakdown(&preds).unwrap();
    for (model, _, want) in DIALECT_COUNTS {
        for (d, w) in [Dialect::Central, Dialect::Western, Dialect::Navarrese].into_iter().zip(want) {
            let got = table.get(model, d).unwrap();
            assert!((got - w).abs() < 0.005, "{model} {d:?}: {got}");
        }
    }
}
