//! `key=value` configuration files for the simulator and the trainer.
//! Keys left out keep their defaults.

use icegraph_core::optim::OptimizerKind;
use icegraph_core::{Architecture, SimConfig, TrainConfig};

use crate::error::{CliError, CliResult};
use crate::formats::keyvalue::{KeyValueWriter, KeyValues};

const SIM_KEYS: [&str; 21] = [
    "spectral_index_true",
    "spectral_index_gen",
    "energy_min",
    "energy_max",
    "background_index_true",
    "background_index_gen",
    "background_energy_min",
    "background_energy_max",
    "signal_rate",
    "background_rate",
    "multiplicity_min",
    "multiplicity_max",
    "absorption_length",
    "segment_length",
    "light_yield",
    "ionization_loss",
    "radiative_coefficient",
    "burst_rate",
    "burst_sigma_log",
    "min_hits",
    "seed",
];

pub fn sim_config(kv: &KeyValues) -> CliResult<SimConfig> {
    kv.reject_unknown(&SIM_KEYS)?;
    let mut c = SimConfig::default();
    macro_rules! set {
        ($key:literal, $field:expr) => {
            if let Some(v) = kv.get($key)? {
                $field = v;
            }
        };
    }
    set!("spectral_index_true", c.spectral_index_true);
    set!("spectral_index_gen", c.spectral_index_gen);
    set!("energy_min", c.energy_range.0);
    set!("energy_max", c.energy_range.1);
    set!("background_index_true", c.background_index_true);
    set!("background_index_gen", c.background_index_gen);
    set!("background_energy_min", c.background_energy_range.0);
    set!("background_energy_max", c.background_energy_range.1);
    set!("signal_rate", c.signal_rate);
    set!("background_rate", c.background_rate);
    set!("multiplicity_min", c.bundle_multiplicity_range.0);
    set!("multiplicity_max", c.bundle_multiplicity_range.1);
    set!("absorption_length", c.absorption_length);
    set!("segment_length", c.segment_length);
    set!("light_yield", c.light_yield);
    set!("ionization_loss", c.ionization_loss);
    set!("radiative_coefficient", c.radiative_coefficient);
    set!("burst_rate", c.burst_rate);
    set!("burst_sigma_log", c.burst_sigma_log);
    set!("min_hits", c.min_hits);
    set!("seed", c.seed);
    c.validate()?;
    Ok(c)
}

pub fn render_sim_config(c: &SimConfig) -> String {
    KeyValueWriter::new()
        .put("spectral_index_true", c.spectral_index_true)
        .put("spectral_index_gen", c.spectral_index_gen)
        .put("energy_min", c.energy_range.0)
        .put("energy_max", c.energy_range.1)
        .put("background_index_true", c.background_index_true)
        .put("background_index_gen", c.background_index_gen)
        .put("background_energy_min", c.background_energy_range.0)
        .put("background_energy_max", c.background_energy_range.1)
        .put("signal_rate", c.signal_rate)
        .put("background_rate", c.background_rate)
        .put("multiplicity_min", c.bundle_multiplicity_range.0)
        .put("multiplicity_max", c.bundle_multiplicity_range.1)
        .put("absorption_length", c.absorption_length)
        .put("segment_length", c.segment_length)
        .put("light_yield", c.light_yield)
        .put("ionization_loss", c.ionization_loss)
        .put("radiative_coefficient", c.radiative_coefficient)
        .put("burst_rate", c.burst_rate)
        .put("burst_sigma_log", c.burst_sigma_log)
        .put("min_hits", c.min_hits)
        .put("seed", c.seed)
        .finish()
}

const TRAIN_KEYS: [&str; 9] = [
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "optimizer",
    "weighted_loss",
    "seed",
    "widths",
    "target_snr",
];

pub fn optimizer_name(kind: OptimizerKind) -> &'static str {
    match kind {
        OptimizerKind::Adam => "adam",
        OptimizerKind::Sgd => "sgd",
    }
}

pub fn train_config(kv: &KeyValues) -> CliResult<TrainConfig> {
    kv.reject_unknown(&TRAIN_KEYS)?;
    let mut c = TrainConfig::default();
    if let Some(v) = kv.get("learning_rate")? {
        c.learning_rate = v;
    }
    if let Some(v) = kv.get("batch_size")? {
        c.batch_size = v;
    }
    if let Some(v) = kv.get("max_epochs")? {
        c.max_epochs = v;
    }
    if let Some(v) = kv.get("patience")? {
        c.patience = v;
    }
    if let Some(name) = kv.get::<String>("optimizer")? {
        c.optimizer = match name.as_str() {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::Sgd,
            other => return Err(CliError::Usage(format!("unknown optimizer `{other}` (adam or sgd)"))),
        };
    }
    if let Some(v) = kv.get("weighted_loss")? {
        c.weighted_loss = v;
    }
    if let Some(v) = kv.get("seed")? {
        c.seed = v;
    }
    if let Some(widths) = kv.get_list("widths")? {
        c.architecture = Architecture { widths };
    }
    if let Some(v) = kv.get("target_snr")? {
        c.target_snr = v;
    }
    c.validate()?;
    Ok(c)
}

pub fn render_train_config(c: &TrainConfig) -> String {
    KeyValueWriter::new()
        .put("learning_rate", c.learning_rate)
        .put("batch_size", c.batch_size)
        .put("max_epochs", c.max_epochs)
        .put("patience", c.patience)
        .put("optimizer", optimizer_name(c.optimizer))
        .put("weighted_loss", c.weighted_loss)
        .put("seed", c.seed)
        .list("widths", &c.architecture.widths)
        .put("target_snr", c.target_snr)
        .finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn defaults_round_trip() {
        let p = Path::new("cfg");
        let sim = sim_config(&KeyValues::parse(p, &render_sim_config(&SimConfig::default())).unwrap()).unwrap();
        assert_eq!(sim, SimConfig::default());
        let train = train_config(&KeyValues::parse(p, &render_train_config(&TrainConfig::default())).unwrap()).unwrap();
        assert_eq!(train, TrainConfig::default());
    }

    #[test]
    fn overrides_and_rejections() {
        let p = Path::new("cfg");
        let c = train_config(&KeyValues::parse(p, "widths=4,8\noptimizer=sgd\n").unwrap()).unwrap();
        assert_eq!(c.architecture.widths, vec![4, 8]);
        assert_eq!(c.optimizer, OptimizerKind::Sgd);
        assert!(train_config(&KeyValues::parse(p, "max_epochs=0\n").unwrap()).is_err());
        assert!(sim_config(&KeyValues::parse(p, "colour=blue\n").unwrap()).is_err());
    }
}
