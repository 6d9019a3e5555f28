//! Model files.
//!
//! ```text
//! icegraph-model 1
//! sigma <meters>
//! normalizer_mean <6 values>
//! normalizer_scale <6 values>
//! layers <T>
//! layer <rows> <cols>        T times, each followed by
//! weight <rows·cols values>  row-major
//! bias <cols values>
//! head <len>
//! weight <len values>
//! bias <value>
//! end
//! ```
//!
//! Values are space separated. A file without the final `end` line, or
//! with any count that disagrees with the declared shapes, is rejected.

use std::fmt::Write as _;
use std::path::Path;

use icegraph_core::graph::FEATURE_DIM;
use icegraph_core::model::{GConvLayer, PoolingHead};
use icegraph_core::{GnnModel, Matrix, Normalizer};

use super::{read_text, write_text};
use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "icegraph-model";
pub const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(ToString::to_string).collect();
    parts.join(" ")
}

pub fn render_model(model: &GnnModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "sigma {}", model.sigma);
    let _ = writeln!(out, "normalizer_mean {}", join(&model.normalizer.mean));
    let _ = writeln!(out, "normalizer_scale {}", join(&model.normalizer.scale));
    let _ = writeln!(out, "layers {}", model.layers.len());
    for layer in &model.layers {
        let _ = writeln!(out, "layer {} {}", layer.weight.rows(), layer.weight.cols());
        let _ = writeln!(out, "weight {}", join(layer.weight.as_slice()));
        let _ = writeln!(out, "bias {}", join(&layer.bias));
    }
    let _ = writeln!(out, "head {}", model.head.weight.len());
    let _ = writeln!(out, "weight {}", join(&model.head.weight));
    let _ = writeln!(out, "bias {}", model.head.bias);
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::parse(self.path, self.line, message)
    }

    /// Next line, split into its tag and the remaining fields.
    fn record(&mut self, tag: &str) -> CliResult<Vec<&'a str>> {
        let (i, text) = self
            .lines
            .next()
            .ok_or_else(|| CliError::parse(self.path, self.line + 1, format!("truncated: expected `{tag}`")))?;
        self.line = i + 1;
        let mut fields = text.split_ascii_whitespace();
        match fields.next() {
            Some(t) if t == tag => Ok(fields.collect()),
            _ => Err(self.err(format!("expected `{tag}`"))),
        }
    }

    fn numbers(&mut self, tag: &str, count: usize) -> CliResult<Vec<f64>> {
        let fields = self.record(tag)?;
        if fields.len() != count {
            return Err(self.err(format!("{tag}: expected {count} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| self.err(format!("{tag}: `{f}` is not a number"))))
            .collect()
    }

    fn counts(&mut self, tag: &str, count: usize) -> CliResult<Vec<usize>> {
        let fields = self.record(tag)?;
        if fields.len() != count {
            return Err(self.err(format!("{tag}: expected {count} integers")));
        }
        fields
            .iter()
            .map(|f| f.parse::<usize>().map_err(|_| self.err(format!("{tag}: `{f}` is not an integer"))))
            .collect()
    }
}

pub fn parse_model(path: &Path, text: &str) -> CliResult<GnnModel> {
    let mut r = Reader {
        path,
        lines: text.lines().enumerate(),
        line: 0,
    };
    let version = r.record(MAGIC).map_err(|_| CliError::parse(path, 1, "not a model file"))?;
    if version != [VERSION.to_string().as_str()] {
        return Err(CliError::parse(path, 1, format!("unsupported model version {version:?}")));
    }
    let sigma = r.numbers("sigma", 1)?[0];
    let mut normalizer = Normalizer::identity();
    normalizer.mean.copy_from_slice(&r.numbers("normalizer_mean", FEATURE_DIM)?);
    normalizer.scale.copy_from_slice(&r.numbers("normalizer_scale", FEATURE_DIM)?);
    let t = r.counts("layers", 1)?[0];
    let mut layers = Vec::with_capacity(t);
    for _ in 0..t {
        let shape = r.counts("layer", 2)?;
        let (rows, cols) = (shape[0], shape[1]);
        let weight = Matrix::from_vec(rows, cols, r.numbers("weight", rows * cols)?)?;
        let bias = r.numbers("bias", cols)?;
        layers.push(GConvLayer { weight, bias });
    }
    let len = r.counts("head", 1)?[0];
    let head = PoolingHead {
        weight: r.numbers("weight", len)?,
        bias: r.numbers("bias", 1)?[0],
    };
    r.record("end")?;
    let model = GnnModel {
        sigma,
        layers,
        head,
        normalizer,
    };
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> CliResult<GnnModel> {
    parse_model(path, &read_text(path)?)
}

pub fn save_model(model: &GnnModel, path: &Path) -> CliResult<()> {
    write_text(path, &render_model(model))
}
