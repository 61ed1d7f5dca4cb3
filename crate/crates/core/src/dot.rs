//! Graphviz DOT export of summary graphs.
//!
//! Node width is `1.5 * sqrt(size / max_size)` so drawn area tracks member
//! count. Edge penwidth maps weights affinely onto `[1, 8]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mapper::{Colour, SummaryGraph};

pub const MAX_NODE_WIDTH: f64 = 1.5;
pub const PENWIDTH_RANGE: (f64, f64) = (1.0, 8.0);
/// Fill for nodes without a colour payload.
pub const NO_COLOUR: &str = "#cccccc";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    /// Sequential map for scalars, `#440154` at 0 to `#fde725` at 1.
    Viridis,
    /// Bilinear blend of four corner colours over the unit square.
    Bivariate,
    /// Ten categorical colours, cycled by class id.
    ClassPalette,
    /// Three coordinates read directly as red, green, blue.
    Rgb,
}

impl Colormap {
    /// The natural map for the payloads present in `sg`.
    pub fn for_summary(sg: &SummaryGraph) -> Self {
        match sg.nodes.iter().find_map(|n| n.colour.as_ref()) {
            Some(Colour::MajorityClass(_)) => Colormap::ClassPalette,
            Some(Colour::MeanLens(v)) if v.len() == 2 => Colormap::Bivariate,
            Some(Colour::MeanLens(v)) if v.len() >= 3 => Colormap::Rgb,
            _ => Colormap::Viridis,
        }
    }
}

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 82, 139],
    [44, 114, 142],
    [33, 145, 140],
    [40, 174, 128],
    [94, 201, 98],
    [170, 220, 50],
    [253, 231, 37],
];

/// Corners at (0,0), (1,0), (0,1), (1,1).
pub const BIVARIATE_CORNERS: [[u8; 3]; 4] = [
    [0xe8, 0xe8, 0xe8],
    [0xc8, 0x5a, 0x5a],
    [0x64, 0xac, 0xbe],
    [0x57, 0x42, 0x49],
];

pub const CLASS_PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

fn hex(rgb: [f64; 3]) -> String {
    let c = |x: f64| (x.clamp(0.0, 255.0)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(rgb[0]), c(rgb[1]), c(rgb[2]))
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] + (b[i] - a[i]) * t)
}

fn as_f64(c: [u8; 3]) -> [f64; 3] {
    c.map(f64::from)
}

pub fn viridis(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    hex(lerp(as_f64(VIRIDIS[i]), as_f64(VIRIDIS[i + 1]), pos - i as f64))
}

pub fn bivariate(x: f64, y: f64) -> String {
    let clamp = |t: f64| if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let (x, y) = (clamp(x), clamp(y));
    let [c00, c10, c01, c11] = BIVARIATE_CORNERS.map(as_f64);
    hex(lerp(lerp(c00, c10, x), lerp(c01, c11, x), y))
}

pub fn class_colour(class: u32) -> &'static str {
    CLASS_PALETTE[class as usize % CLASS_PALETTE.len()]
}

fn rgb(v: &[f64]) -> String {
    let at = |i: usize| v.get(i).copied().filter(|x| x.is_finite()).unwrap_or(0.0) * 255.0;
    hex([at(0), at(1), at(2)])
}

/// Colour payloads as points in the unit cube. Mean lenses leaving `[0, 1]`
/// are min-max rescaled per axis across nodes; classes are spread over `[0, 1]`.
fn unit_coordinates(sg: &SummaryGraph) -> Vec<Option<Vec<f64>>> {
    let max_class = sg
        .nodes
        .iter()
        .filter_map(|n| match n.colour {
            Some(Colour::MajorityClass(c)) => Some(c),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let dim = sg
        .nodes
        .iter()
        .filter_map(|n| match &n.colour {
            Some(Colour::MeanLens(v)) => Some(v.len()),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for n in &sg.nodes {
        if let Some(Colour::MeanLens(v)) = &n.colour {
            for (r, &x) in ranges.iter_mut().zip(v) {
                *r = (r.0.min(x), r.1.max(x));
            }
        }
    }
    let rescale = ranges.iter().any(|&(lo, hi)| lo < 0.0 || hi > 1.0);
    sg.nodes
        .iter()
        .map(|n| {
            n.colour.as_ref().map(|c| match c {
                Colour::PositiveFraction(p) => vec![*p],
                Colour::MajorityClass(k) => vec![if max_class == 0 {
                    0.0
                } else {
                    f64::from(*k) / f64::from(max_class)
                }],
                Colour::MeanLens(v) if rescale => v
                    .iter()
                    .zip(&ranges)
                    .map(|(&x, &(lo, hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.5 })
                    .collect(),
                Colour::MeanLens(v) => v.clone(),
            })
        })
        .collect()
}

fn fill(colour: Option<&Colour>, unit: Option<&Vec<f64>>, map: Colormap) -> String {
    let (Some(colour), Some(unit)) = (colour, unit) else {
        return NO_COLOUR.to_string();
    };
    let x = unit.first().copied().unwrap_or(0.0);
    let y = unit.get(1).copied().unwrap_or(0.0);
    match map {
        Colormap::Viridis => viridis(x),
        Colormap::Bivariate => bivariate(x, y),
        Colormap::Rgb => rgb(unit),
        Colormap::ClassPalette => match colour {
            Colour::MajorityClass(k) => class_colour(*k).to_string(),
            _ => class_colour((x.clamp(0.0, 1.0) * 9.0).round() as u32).to_string(),
        },
    }
}

/// Renders `sg` as an undirected DOT graph. Output is deterministic.
pub fn export_dot(sg: &SummaryGraph, colormap: Colormap) -> String {
    let max_size = sg.nodes.iter().map(|n| n.size).max().unwrap_or(0).max(1) as f64;
    let (wmin, wmax) = sg.edges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.weight), hi.max(e.weight))
    });
    let (pmin, pmax) = PENWIDTH_RANGE;
    let penwidth = |w: f64| {
        if wmax > wmin {
            pmin + (pmax - pmin) * (w - wmin) / (wmax - wmin)
        } else {
            pmin
        }
    };
    let units = unit_coordinates(sg);

    let mut out = String::from("graph mapper {\n");
    out.push_str("  node [shape=circle, style=filled, fixedsize=true, fontsize=8];\n");
    for (node, unit) in sg.nodes.iter().zip(&units) {
        let width = MAX_NODE_WIDTH * (node.size as f64 / max_size).sqrt();
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", width={:.6}, fillcolor=\"{}\", tooltip=\"size {}\"];",
            node.id,
            node.id,
            width,
            fill(node.colour.as_ref(), unit.as_ref(), colormap),
            node.size
        );
    }
    for e in &sg.edges {
        let _ = writeln!(
            out,
            "  n{} -- n{} [penwidth={:.6}, tooltip=\"weight {}\"];",
            e.u,
            e.v,
            penwidth(e.weight),
            e.weight
        );
    }
    out.push_str("}\n");
    out
}
