//! TOML training configuration. Field names follow [`TrainConfig`]; missing
//! fields take their defaults and unknown fields are rejected.

use std::path::Path;

use epo_core::trainer::TrainConfig;

use crate::error::{Error, Result};

pub fn parse_config(text: &str) -> std::result::Result<TrainConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|message| Error::Config(vec![format!("{}: {}", path.display(), message.trim_end())]))
}

pub fn to_toml(config: &TrainConfig) -> String {
    toml::to_string(config).expect("training config always serializes")
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub skip_pretrain: bool,
    pub epochs_pretrain: Option<usize>,
    pub epochs_train: Option<usize>,
    pub embed_dim: Option<usize>,
    pub clause_dim: Option<usize>,
    pub k: Option<usize>,
    pub window: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut TrainConfig) {
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if self.skip_pretrain {
            config.skip_pretrain = true;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    config.$field = v;
                }
            )*};
        }
        set!(epochs_pretrain, epochs_train, embed_dim, clause_dim, k, window);
    }
}

/// Base config (file or defaults) with overrides applied, then validated.
pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => TrainConfig::default(),
    };
    overrides.apply(&mut config);
    config.validate().map_err(Error::Config)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_renamed_fields() {
        let c = TrainConfig { k: 4, window: 1, seed: 9, clip_norm: Some(5.0), ..TrainConfig::default() };
        assert_eq!(parse_config(&to_toml(&c)).unwrap(), c);
        let partial = parse_config("K = 2\nw = 0\n[dropout]\nword = 0.3\n").unwrap();
        assert_eq!((partial.k, partial.window, partial.dropout.word), (2, 0, 0.3));
        assert_eq!(partial.dropout.embedding, 0.1);
        assert_eq!(partial.epochs_train, 50);
        assert!(parse_config("bogus = 1\n").is_err());
    }

    #[test]
    fn overrides_win_and_validation_lists_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 1\nepochs_train = 3\n").unwrap();
        let o = Overrides { seed: Some(5), skip_pretrain: true, ..Overrides::default() };
        let c = resolve(Some(&p), &o).unwrap();
        assert_eq!((c.seed, c.epochs_train, c.skip_pretrain), (5, 3, true));

        std::fs::write(&p, "batch_size = 0\n[dropout]\nword = 1.5\n").unwrap();
        match resolve(Some(&p), &Overrides::default()) {
            Err(Error::Config(fields)) => assert!(fields.len() >= 2, "{fields:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
