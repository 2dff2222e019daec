//! Synthetic network data: a group-biased preferential-attachment generator.
//! Arriving vertices attach to existing ones with probability proportional to
//! degree, discounted by a constant factor for the disadvantaged group; final
//! degrees serve as utilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::selection::Group;

/// Generator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkGenConfig {
    /// Vertices in the random seed graph.
    pub seed_size: usize,
    /// Total vertices after growth.
    pub final_size: usize,
    /// Probability that a vertex joins the advantaged group.
    pub group_prob: f64,
    /// Multiplier on the attachment weight of disadvantaged vertices, in (0, 1].
    pub disadvantage_factor: f64,
    pub seed: u64,
}

impl Default for NetworkGenConfig {
    fn default() -> Self {
        Self {
            seed_size: 50,
            final_size: 10_000,
            group_prob: 0.5,
            disadvantage_factor: 0.5,
            seed: 0,
        }
    }
}

/// Final degree of one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DegreeRecord {
    pub vertex: usize,
    pub group: Group,
    pub degree: usize,
}

/// Attachment weight of each existing vertex: degree, discounted for the
/// disadvantaged group.
pub(crate) fn attachment_weights(degrees: &[usize], groups: &[Group], factor: f64) -> Vec<f64> {
    degrees
        .iter()
        .zip(groups)
        .map(|(&d, &g)| {
            let w = d as f64;
            match g {
                Group::Advantaged => w,
                Group::Disadvantaged => factor * w,
            }
        })
        .collect()
}

/// Generate the biased network and return every vertex's final degree.
///
/// The seed graph connects each vertex pair independently with probability
/// `2 / seed_size`; a vertex left isolated receives one edge to a uniformly
/// random other vertex so every attachment weight is positive from the start.
/// Each of the remaining arrivals joins a group and attaches a single edge.
pub fn generate_biased_ba(config: &NetworkGenConfig) -> Result<Vec<DegreeRecord>> {
    validate(config)?;
    let m = config.seed_size;
    let n = config.final_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw_group = |rng: &mut ChaCha8Rng| {
        if rng.gen::<f64>() < config.group_prob {
            Group::Advantaged
        } else {
            Group::Disadvantaged
        }
    };

    let mut groups: Vec<Group> = Vec::with_capacity(n);
    for _ in 0..m {
        groups.push(draw_group(&mut rng));
    }

    let mut degrees = vec![0usize; n];
    let pair_prob = 2.0 / m as f64;
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.gen::<f64>() < pair_prob {
                degrees[i] += 1;
                degrees[j] += 1;
            }
        }
    }
    // repair isolated seed vertices with one uniformly random edge
    for i in 0..m {
        if degrees[i] == 0 {
            let mut j = rng.gen_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            degrees[i] += 1;
            degrees[j] += 1;
        }
    }

    for t in m..n {
        groups.push(draw_group(&mut rng));
        let weights = attachment_weights(&degrees[..t], &groups[..t], config.disadvantage_factor);
        let target = sample_weighted(&weights, &mut rng);
        degrees[target] += 1;
        degrees[t] += 1;
    }

    Ok((0..n)
        .map(|vertex| DegreeRecord {
            vertex,
            group: groups[vertex],
            degree: degrees[vertex],
        })
        .collect())
}

fn sample_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn validate(config: &NetworkGenConfig) -> Result<()> {
    if config.seed_size < 2 || config.seed_size > config.final_size {
        return Err(Error::InvalidNetworkConfig(format!(
            "need 2 <= seed_size <= final_size, got {} and {}",
            config.seed_size, config.final_size
        )));
    }
    if config.group_prob.is_nan() || config.group_prob <= 0.0 || config.group_prob >= 1.0 {
        return Err(Error::InvalidNetworkConfig(format!(
            "group_prob must be in (0, 1), got {}",
            config.group_prob
        )));
    }
    if config.disadvantage_factor.is_nan()
        || config.disadvantage_factor <= 0.0
        || config.disadvantage_factor > 1.0
    {
        return Err(Error::InvalidNetworkConfig(format!(
            "disadvantage_factor must be in (0, 1], got {}",
            config.disadvantage_factor
        )));
    }
    Ok(())
}
