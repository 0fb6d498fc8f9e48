//! The curve parametrization and its closed-form geodesic distance, against
//! shortest paths through a dense polygonal approximation of the curve.

use petgraph::algo::dijkstra;
use petgraph::graph::UnGraph;

use imgp::experiment::data::BAR_HALF_WIDTH;
use imgp::experiment::{gen_dumbbell, Dumbbell};

const SAMPLES: usize = 5000;

fn polygon(curve: &Dumbbell) -> (Vec<f64>, UnGraph<(), f64>) {
    let h = curve.length() / SAMPLES as f64;
    let s: Vec<f64> = (0..SAMPLES).map(|i| i as f64 * h).collect();
    let pts: Vec<[f64; 2]> = s.iter().map(|&t| curve.point(t)).collect();
    let mut g = UnGraph::<(), f64>::with_capacity(SAMPLES, SAMPLES);
    let nodes: Vec<_> = (0..SAMPLES).map(|_| g.add_node(())).collect();
    for i in 0..SAMPLES {
        let j = (i + 1) % SAMPLES;
        let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
        g.add_edge(nodes[i], nodes[j], d);
    }
    (s, g)
}

#[test]
fn geodesic_matches_dijkstra_on_dense_polygon() {
    let curve = Dumbbell::default();
    let (s, g) = polygon(&curve);
    for source in [0usize, 1234, 2500, 4321] {
        let dist = dijkstra(&g, (source as u32).into(), None, |e| *e.weight());
        let mut worst = 0.0f64;
        for (node, d) in dist {
            let i = node.index();
            worst = worst.max((d - curve.geodesic(s[source], s[i])).abs());
        }
        assert!(worst < 1e-3, "source {source}: worst deviation {worst}");
    }
}

#[test]
fn polygon_perimeter_is_curve_length() {
    let curve = Dumbbell::default();
    let (_, g) = polygon(&curve);
    let perimeter: f64 = g.edge_weights().sum();
    // chords cut the four corners where the bars meet the circles
    assert!(perimeter < curve.length() && curve.length() - perimeter < 2e-3, "{perimeter} vs {}", curve.length());
}

#[test]
fn target_is_sine_of_geodesic_distance_from_anchor() {
    let curve = Dumbbell::default();
    let a = curve.anchor();
    let top = curve.point(a);
    assert!((top[0] + 2.5).abs() < 1e-12 && (top[1] - 1.0).abs() < 1e-12, "{top:?}");
    for i in 0..100 {
        let s = i as f64 * curve.length() / 100.0;
        assert!((curve.target(s) - curve.geodesic(a, s).sin()).abs() < 1e-12);
    }
}

#[test]
fn generated_cloud_lies_on_the_curve_without_noise() {
    let curve = Dumbbell::default();
    let data = gen_dumbbell(500, 0.0, 10, 3).unwrap();
    for i in 0..data.cloud.len() {
        assert!(curve.distance_to_curve(data.cloud.point(i)) < 1e-12);
    }
    for i in 0..data.test_points.len() {
        let p = data.test_points.row(i);
        assert!(p[1].abs() <= 1.0 + 1e-12);
        assert!(curve.distance_to_curve(p) < 1e-12);
    }
}

#[test]
fn bars_join_the_circles() {
    let curve = Dumbbell::default();
    let h = 1e-9;
    for k in 0..4 {
        // the four junctions between arcs and bars
        let s = (0..curve.length() as usize * 1000)
            .map(|i| i as f64 / 1000.0)
            .filter(|&s| (curve.point(s)[1].abs() - BAR_HALF_WIDTH).abs() < 1e-3 && curve.point(s)[0].abs() > 1.0)
            .nth(k * 10)
            .unwrap_or(0.0);
        let (a, b) = (curve.point(s - h), curve.point(s + h));
        assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() < 1e-8);
    }
}
