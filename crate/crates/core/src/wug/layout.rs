use super::{Clustering, Wug};
use crate::{seed, Period};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    pub id: String,
    pub context: String,
    pub target_index: usize,
    pub period: Period,
    pub cluster: Option<usize>,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

/// Node-link structure consumed by the graph viewer. Excluded usages are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub lemma: String,
    pub nodes: Vec<LayoutNode>,
    pub edges: Vec<LayoutEdge>,
}

const ITERATIONS: usize = 200;

/// Fruchterman-Reingold in the unit square; edge attraction scales with `weight - 1`.
pub fn layout(wug: &Wug, clustering: Option<&Clustering>, seed: u64) -> Layout {
    let nodes: Vec<_> = wug.active_nodes().collect();
    let n = nodes.len();
    let index: std::collections::HashMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, u)| (u.usage_id.as_str(), i)).collect();
    let edges = wug.edges();
    let springs: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|(p, &w)| (index[p.0.as_str()], index[p.1.as_str()], (w - 1.0) / 3.0))
        .collect();

    let mut rng = seed::rng(seed, &["layout", &wug.lemma]);
    let mut pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    if n > 1 {
        let k = (1.0 / n as f64).sqrt();
        let mut temp = 0.1;
        let cooling = temp / ITERATIONS as f64;
        for _ in 0..ITERATIONS {
            let mut disp = vec![[0.0f64; 2]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let d = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
                    let dist = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-6);
                    let f = k * k / dist;
                    for a in 0..2 {
                        disp[i][a] += d[a] / dist * f;
                        disp[j][a] -= d[a] / dist * f;
                    }
                }
            }
            for &(i, j, s) in &springs {
                let d = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
                let dist = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-6);
                let f = s * dist * dist / k;
                for a in 0..2 {
                    disp[i][a] -= d[a] / dist * f;
                    disp[j][a] += d[a] / dist * f;
                }
            }
            for i in 0..n {
                let len = (disp[i][0].powi(2) + disp[i][1].powi(2)).sqrt().max(1e-12);
                for a in 0..2 {
                    pos[i][a] = (pos[i][a] + disp[i][a] / len * len.min(temp)).clamp(0.0, 1.0);
                }
            }
            temp -= cooling;
        }
    }

    Layout {
        lemma: wug.lemma.clone(),
        nodes: nodes
            .iter()
            .zip(&pos)
            .map(|(u, p)| LayoutNode {
                id: u.usage_id.clone(),
                context: u.context.clone(),
                target_index: u.target_index,
                period: u.period,
                cluster: clustering.and_then(|c| c.get(&u.usage_id).copied()),
                x: p[0],
                y: p[1],
            })
            .collect(),
        edges: edges
            .into_iter()
            .map(|(p, weight)| LayoutEdge { source: p.0, target: p.1, weight })
            .collect(),
    }
}
