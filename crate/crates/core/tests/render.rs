use std::path::PathBuf;

use somkit::analysis::{self, MapLayer, Stat};
use somkit::clustering::{self, Algorithm, ClusterSpace};
use somkit::data::{make_blobs, BlobSpec};
use somkit::render::{self, RenderStyle};
use somkit::{GridTopology, SomModel, TopologyKind, TrainConfig};

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Compares against a frozen file. `SOMKIT_BLESS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = fixture_path(name);
    if std::env::var_os("SOMKIT_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

fn layer_3x3(kind: TopologyKind, values: [Option<f64>; 9], label: &str) -> MapLayer {
    MapLayer::new(GridTopology::new(kind, 3, 3).unwrap(), values.to_vec(), label).unwrap()
}

const SEQ: [Option<f64>; 9] = [
    Some(0.0),
    Some(0.5),
    Some(1.0),
    Some(1.5),
    None,
    Some(2.5),
    Some(3.0),
    Some(3.5),
    Some(4.0),
];

#[test]
fn golden_rect_sequential() {
    let svg = render::render_map(&layer_3x3(TopologyKind::Rectangular, SEQ, "u"), &RenderStyle::titled("rect")).unwrap();
    check_golden("rect_3x3.svg", &svg);
}

#[test]
fn golden_hex_sequential() {
    let svg = render::render_map(&layer_3x3(TopologyKind::Hexagonal, SEQ, "u"), &RenderStyle::titled("hex")).unwrap();
    check_golden("hex_3x3.svg", &svg);
}

#[test]
fn golden_hex_categorical() {
    let ids = [0.0, 0.0, 1.0, 0.0, 2.0, 1.0, 2.0, 2.0, 1.0].map(Some);
    let style = RenderStyle::titled("clusters").categorical();
    let svg = render::render_map(&layer_3x3(TopologyKind::Hexagonal, ids, "cluster"), &style).unwrap();
    check_golden("hex_3x3_categorical.svg", &svg);
}

#[test]
fn golden_all_absent() {
    let svg = render::render_map(&layer_3x3(TopologyKind::Rectangular, [None; 9], "empty"), &RenderStyle::default()).unwrap();
    check_golden("rect_3x3_empty.svg", &svg);
}

#[test]
fn golden_learning_curves() {
    let qe = [1.0, 0.6, 0.45, 0.4];
    let te = [0.3, 0.2, 0.15, 0.1];
    let svg = render::render_learning_curves(&qe, &te, &RenderStyle::titled("curves")).unwrap();
    check_golden("curves.svg", &svg);
}

#[test]
fn golden_layer_csv() {
    check_golden("rect_3x3.csv", &layer_3x3(TopologyKind::Rectangular, SEQ, "u").to_csv_string());
}

fn count_cells(svg: &str) -> usize {
    let doc = roxmltree::Document::parse(svg).unwrap_or_else(|e| panic!("invalid XML: {e}"));
    doc.descendants()
        .filter(|n| n.is_element() && n.attribute("class") == Some("cell"))
        .count()
}

fn trained_25x15(kind: TopologyKind) -> (SomModel, somkit::Dataset) {
    let data = make_blobs(&BlobSpec::new(240, 4, 3)).unwrap();
    let data = data
        .clone()
        .with_target(data.column(0).iter().map(|v| v * 2.0 + 1.0).collect())
        .unwrap()
        .with_labels((0..240).map(|i| i % 3).collect())
        .unwrap();
    let topo = GridTopology::new(kind, 25, 15).unwrap();
    let mut model = SomModel::init_pca(topo, 4, &data).unwrap().model;
    let cfg = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    model.fit(&data, &cfg).unwrap();
    (model, data)
}

#[test]
fn every_map_of_a_25x15_model_parses_with_375_cells() {
    for kind in [TopologyKind::Rectangular, TopologyKind::Hexagonal] {
        let (model, data) = trained_25x15(kind);
        let buf = analysis::assign(&model, &data).unwrap();
        let t = data.target().unwrap();
        let mean = analysis::metric_map(&buf, t, Stat::Mean).unwrap();
        let clusters = clustering::cluster(&model, ClusterSpace::WEIGHTS, Algorithm::KMeans, 3, 0).unwrap();
        let sequential = vec![
            analysis::u_matrix(&model),
            analysis::hit_map(&buf),
            analysis::component_plane(&model, 2).unwrap(),
            mean.clone(),
            analysis::metric_map(&buf, t, Stat::Std).unwrap(),
            analysis::score_map(&buf, t).unwrap(),
            analysis::rank_map(&mean),
        ];
        let categorical = vec![
            analysis::classification_map(&buf, data.labels().unwrap()).unwrap(),
            clusters.layer(&model).unwrap(),
        ];
        for layer in &sequential {
            let svg = render::render_map(layer, &RenderStyle::titled(layer.label())).unwrap();
            assert_eq!(count_cells(&svg), 375, "{kind:?} {}", layer.label());
        }
        for layer in &categorical {
            let svg = render::render_map(layer, &RenderStyle::titled(layer.label()).categorical()).unwrap();
            assert_eq!(count_cells(&svg), 375, "{kind:?} {}", layer.label());
        }
    }
}

#[test]
fn charts_parse() {
    let (model, _) = trained_25x15(TopologyKind::Hexagonal);
    let rows = clustering::compare(&model, &[ClusterSpace::WEIGHTS, ClusterSpace::POSITIONS], &Algorithm::ALL, 3, 1).unwrap();
    let bars = render::render_bars(&rows, &RenderStyle::default()).unwrap();
    let doc = roxmltree::Document::parse(&bars).unwrap();
    let n_bars = doc.descendants().filter(|n| n.attribute("class") == Some("bar")).count();
    assert_eq!(n_bars, 3 * rows.len());
    let curves = render::render_learning_curves(&[3.0, 2.0, 1.0], &[0.5, 0.2, 0.1], &RenderStyle::default()).unwrap();
    roxmltree::Document::parse(&curves).unwrap();
}
