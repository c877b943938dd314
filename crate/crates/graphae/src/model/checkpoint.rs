//! Plain-text model checkpoints.
//!
//! Floats are written with 17 significant digits, which reproduces every
//! `f64` bit for bit on reload.

use std::io::{BufRead, Write};

use ndarray::Array2;

use super::decoder::{DecoderConfig, DecoderKind};
use super::encoder::{EncoderKind, EncoderWeights, Layer};
use super::train::{ModelSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::graph::OperatorKind;

const MAGIC: &str = "graphae-checkpoint";
const VERSION: u32 = 1;

fn write_matrix<W: Write>(w: &mut W, name: &str, m: &Array2<f64>) -> std::io::Result<()> {
    writeln!(w, "matrix {name} {} {}", m.nrows(), m.ncols())?;
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(" "))?;
    }
    Ok(())
}

struct Tokens<'a> {
    it: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.it.next().ok_or_else(|| bad("unexpected end of checkpoint"))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t != word {
            return Err(bad(&format!("expected '{word}', found '{t}'")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| bad(&format!("cannot parse '{t}'")))
    }

    fn matrix(&mut self, name: &str) -> Result<Array2<f64>> {
        self.expect("matrix")?;
        self.expect(name)?;
        let (r, c): (usize, usize) = (self.parse()?, self.parse()?);
        let mut v = Vec::with_capacity(r * c);
        for _ in 0..r * c {
            v.push(self.parse::<f64>()?);
        }
        Array2::from_shape_vec((r, c), v).map_err(|e| bad(&e.to_string()))
    }
}

fn bad(msg: &str) -> Error {
    Error::Parse { line: 0, msg: format!("checkpoint: {msg}") }
}

impl TrainedModel {
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        let hidden = match s.encoder {
            EncoderKind::Linear => 0,
            EncoderKind::Gcn2 { hidden } => hidden,
        };
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "encoder {} {hidden}", s.encoder.name())?;
        writeln!(w, "variational {}", s.variational as u8)?;
        writeln!(w, "dim {}", s.dim)?;
        writeln!(w, "decoder {} {:.16e} {:.16e}", s.decoder.kind.name(), s.decoder.lambda, s.decoder.dist_floor)?;
        writeln!(w, "operator {}", s.operator.name())?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "featureless {}", self.featureless as u8)?;
        writeln!(w, "prior_lambda {:.16e}", self.prior_lambda)?;
        match &self.core_nodes {
            None => writeln!(w, "core_nodes none")?,
            Some(v) => {
                let ids: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                writeln!(w, "core_nodes {} {}", v.len(), ids.join(" "))?;
            }
        }
        let trace: Vec<String> = self.loss_trace.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "loss_trace {} {}", trace.len(), trace.join(" "))?;
        for (prefix, layer) in std::iter::once(("mean", &self.weights.mean)).chain(self.weights.log_sigma.as_ref().map(|l| ("log_sigma", l))) {
            write_matrix(&mut w, &format!("{prefix}.w0"), &layer.w0)?;
            if let Some(w1) = &layer.w1 {
                write_matrix(&mut w, &format!("{prefix}.w1"), w1)?;
            }
        }
        write_matrix(&mut w, "embedding", &self.embedding)?;
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<TrainedModel> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut t = Tokens { it: text.split_whitespace() };
        t.expect(MAGIC)?;
        let version: u32 = t.parse()?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        t.expect("encoder")?;
        let kind_name = t.next()?;
        let hidden: usize = t.parse()?;
        let encoder = match kind_name {
            "linear" => EncoderKind::Linear,
            "gcn2" => EncoderKind::Gcn2 { hidden },
            other => return Err(bad(&format!("unknown encoder '{other}'"))),
        };
        t.expect("variational")?;
        let variational = t.parse::<u8>()? == 1;
        t.expect("dim")?;
        let dim = t.parse()?;
        t.expect("decoder")?;
        let kind = DecoderKind::parse(t.next()?)?;
        let decoder = DecoderConfig { kind, lambda: t.parse()?, dist_floor: t.parse()? };
        t.expect("operator")?;
        let operator = OperatorKind::parse(t.next()?)?;
        t.expect("seed")?;
        let seed = t.parse()?;
        t.expect("featureless")?;
        let featureless = t.parse::<u8>()? == 1;
        t.expect("prior_lambda")?;
        let prior_lambda = t.parse()?;
        t.expect("core_nodes")?;
        let core_nodes = match t.next()? {
            "none" => None,
            count => {
                let k: usize = count.parse().map_err(|_| bad("bad core node count"))?;
                Some((0..k).map(|_| t.parse()).collect::<Result<Vec<usize>>>()?)
            }
        };
        t.expect("loss_trace")?;
        let len: usize = t.parse()?;
        let loss_trace = (0..len).map(|_| t.parse()).collect::<Result<Vec<f64>>>()?;
        let two_layers = matches!(encoder, EncoderKind::Gcn2 { .. });
        let mut layer = |prefix: &str| -> Result<Layer> {
            let w0 = t.matrix(&format!("{prefix}.w0"))?;
            let w1 = if two_layers { Some(t.matrix(&format!("{prefix}.w1"))?) } else { None };
            Ok(Layer { w0, w1 })
        };
        let mean = layer("mean")?;
        let log_sigma = if variational { Some(layer("log_sigma")?) } else { None };
        let embedding = t.matrix("embedding")?;
        Ok(TrainedModel {
            spec: ModelSpec { encoder, variational, dim, decoder, operator },
            weights: EncoderWeights { kind: encoder, mean, log_sigma },
            embedding,
            loss_trace,
            seed,
            featureless,
            prior_lambda,
            core_nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{load_graph, Features};
    use crate::model::{train, DecoderConfig, ModelSpec, Scaling, TrainConfig, TrainedModel};

    #[test]
    fn checkpoints_round_trip_exactly() {
        let g = load_graph("0 1\n1 2\n2 0\n2 3\n3 4".as_bytes(), true).unwrap();
        let specs = [
            ModelSpec::linear(3, false),
            ModelSpec { decoder: DecoderConfig::gravity(0.3), ..ModelSpec::gcn(2, true) },
        ];
        for spec in specs {
            for scaling in [Scaling::Full, Scaling::KCore { k: 2, iterations: 4 }] {
                let cfg = TrainConfig { epochs: 7, seed: 12, scaling, ..Default::default() };
                let m = train(&g, &Features::Identity(5), &spec, None, &cfg).unwrap();
                let mut buf = Vec::new();
                m.write_checkpoint(&mut buf).unwrap();
                let back = TrainedModel::read_checkpoint(&buf[..]).unwrap();
                assert_eq!(back, m);
            }
        }
        assert!(TrainedModel::read_checkpoint("graphae-checkpoint 9".as_bytes()).is_err());
    }
}
