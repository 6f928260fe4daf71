//! Deterministic test-corpus generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A graph family with parameters.  Seeded families are byte-for-byte
/// deterministic given the seed.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Path { n: usize },
    Cycle { n: usize },
    Grid { width: usize, height: usize },
    /// Two hubs joined by `t` internally disjoint paths of length `leg`.
    Theta { t: usize, leg: usize },
    /// Bottom path and top path over columns `0..=span`, joined by vertical
    /// paths of length `rung` at every `spacing`-th column.
    Comb { span: usize, spacing: usize, rung: usize },
    RandomTree { n: usize, seed: u64 },
    Gnp { n: usize, p: f64, seed: u64 },
}

impl GeneratorSpec {
    /// Parses colon-separated specs such as `path:100`, `theta:3:10`,
    /// `comb:60:30:6`, `grid:10:10`, `random-tree:50:7`, `gnp:20:0.2:7`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let int = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad integer {s:?} in generator spec {text:?}")))
        };
        let seed = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad seed {s:?} in generator spec {text:?}")))
        };
        match (parts[0], parts.len()) {
            ("path", 2) => Ok(GeneratorSpec::Path { n: int(parts[1])? }),
            ("cycle", 2) => Ok(GeneratorSpec::Cycle { n: int(parts[1])? }),
            ("grid", 3) => Ok(GeneratorSpec::Grid {
                width: int(parts[1])?,
                height: int(parts[2])?,
            }),
            ("theta", 3) => Ok(GeneratorSpec::Theta {
                t: int(parts[1])?,
                leg: int(parts[2])?,
            }),
            ("comb", 4) => Ok(GeneratorSpec::Comb {
                span: int(parts[1])?,
                spacing: int(parts[2])?,
                rung: int(parts[3])?,
            }),
            ("random-tree", 3) => Ok(GeneratorSpec::RandomTree {
                n: int(parts[1])?,
                seed: seed(parts[2])?,
            }),
            ("gnp", 4) => Ok(GeneratorSpec::Gnp {
                n: int(parts[1])?,
                p: parts[2].parse().map_err(|_| {
                    Error::Parse(format!("bad probability {:?} in {text:?}", parts[2]))
                })?,
                seed: seed(parts[3])?,
            }),
            _ => Err(Error::Parse(format!(
                "unknown generator spec {text:?}; expected path:<n>, cycle:<n>, grid:<w>:<h>, \
                 theta:<t>:<leg>, comb:<span>:<spacing>:<rung>, random-tree:<n>:<seed>, \
                 gnp:<n>:<p>:<seed>"
            ))),
        }
    }
}

/// Builds the graph described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Graph> {
    match *spec {
        GeneratorSpec::Path { n } => {
            if n == 0 {
                return Err(Error::Invalid("path needs n >= 1".into()));
            }
            let mut g = Graph::new(n);
            for i in 0..n.saturating_sub(1) {
                g.add_edge(i, i + 1)?;
            }
            Ok(g)
        }
        GeneratorSpec::Cycle { n } => {
            if n < 3 {
                return Err(Error::Invalid("cycle needs n >= 3".into()));
            }
            let mut g = Graph::new(n);
            for i in 0..n {
                g.add_edge(i, (i + 1) % n)?;
            }
            Ok(g)
        }
        GeneratorSpec::Grid { width, height } => {
            if width == 0 || height == 0 {
                return Err(Error::Invalid("grid needs positive dimensions".into()));
            }
            let mut g = Graph::new(width * height);
            for r in 0..height {
                for c in 0..width {
                    let v = r * width + c;
                    if c + 1 < width {
                        g.add_edge(v, v + 1)?;
                    }
                    if r + 1 < height {
                        g.add_edge(v, v + width)?;
                    }
                }
            }
            Ok(g)
        }
        GeneratorSpec::Theta { t, leg } => {
            if t == 0 {
                return Err(Error::Invalid("theta needs t >= 1".into()));
            }
            if leg < 2 && t > 1 {
                return Err(Error::Invalid(
                    "theta with t >= 2 needs leg >= 2 (hosts are simple)".into(),
                ));
            }
            if leg == 0 {
                return Err(Error::Invalid("theta needs leg >= 1".into()));
            }
            let mut g = Graph::new(2 + t * (leg - 1));
            for i in 0..t {
                if leg == 1 {
                    g.add_edge(0, 1)?;
                    continue;
                }
                let base = 2 + i * (leg - 1);
                g.add_edge(0, base)?;
                for j in 0..leg - 2 {
                    g.add_edge(base + j, base + j + 1)?;
                }
                g.add_edge(base + leg - 2, 1)?;
            }
            Ok(g)
        }
        GeneratorSpec::Comb { span, spacing, rung } => {
            if spacing == 0 || rung == 0 {
                return Err(Error::Invalid("comb needs spacing >= 1 and rung >= 1".into()));
            }
            let cols = span + 1;
            let rung_cols: Vec<usize> = (0..=span).step_by(spacing).collect();
            let mut g = Graph::new(2 * cols + rung_cols.len() * (rung - 1));
            let bottom = |c: usize| c;
            let top = |c: usize| cols + c;
            for c in 0..span {
                g.add_edge(bottom(c), bottom(c + 1))?;
                g.add_edge(top(c), top(c + 1))?;
            }
            let mut next = 2 * cols;
            for &c in &rung_cols {
                if rung == 1 {
                    g.add_edge(bottom(c), top(c))?;
                    continue;
                }
                let mut prev = bottom(c);
                for _ in 0..rung - 1 {
                    g.add_edge(prev, next)?;
                    prev = next;
                    next += 1;
                }
                g.add_edge(prev, top(c))?;
            }
            Ok(g)
        }
        GeneratorSpec::RandomTree { n, seed } => {
            if n == 0 {
                return Err(Error::Invalid("random-tree needs n >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new(n);
            for v in 1..n {
                let parent = rng.gen_range(0..v);
                g.add_edge(parent, v)?;
            }
            Ok(g)
        }
        GeneratorSpec::Gnp { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid("gnp needs p in [0, 1]".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(p) {
                        g.add_edge(u, v)?;
                    }
                }
            }
            Ok(g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_contract() {
        let g = generate(&GeneratorSpec::Path { n: 5 }).unwrap();
        assert_eq!((g.n(), g.m()), (5, 4));
        let g = generate(&GeneratorSpec::Theta { t: 3, leg: 10 }).unwrap();
        assert_eq!((g.n(), g.m()), (29, 30));
        let g = generate(&GeneratorSpec::Comb { span: 60, spacing: 30, rung: 6 }).unwrap();
        // two paths of 61 columns plus 3 rungs with 5 internal vertices each
        assert_eq!(g.n(), 122 + 15);
        let g = generate(&GeneratorSpec::Grid { width: 4, height: 3 }).unwrap();
        assert_eq!((g.n(), g.m()), (12, 17));
    }

    #[test]
    fn seeded_families_are_deterministic() {
        let a = generate(&GeneratorSpec::Gnp { n: 20, p: 0.2, seed: 7 }).unwrap();
        let b = generate(&GeneratorSpec::Gnp { n: 20, p: 0.2, seed: 7 }).unwrap();
        assert_eq!(a, b);
        let c = generate(&GeneratorSpec::Gnp { n: 20, p: 0.2, seed: 8 }).unwrap();
        assert_ne!(a, c);
        let t = generate(&GeneratorSpec::RandomTree { n: 50, seed: 1 }).unwrap();
        assert_eq!(t.m(), 49);
        assert!(t.is_connected());
    }

    #[test]
    fn spec_parsing_round_trip() {
        assert_eq!(
            GeneratorSpec::parse("theta:3:10").unwrap(),
            GeneratorSpec::Theta { t: 3, leg: 10 }
        );
        assert_eq!(
            GeneratorSpec::parse("comb:60:30:6").unwrap(),
            GeneratorSpec::Comb { span: 60, spacing: 30, rung: 6 }
        );
        assert!(GeneratorSpec::parse("moebius:5").is_err());
        assert!(GeneratorSpec::parse("gnp:10:nope:3").is_err());
    }
}
