use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::DenoiseParams;

/// Every tunable of a detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub denoise: DenoiseParams,
    pub n_scales: usize,
    pub radii: Vec<usize>,
    /// Threshold on log10(NFA); detections need `log_nfa <= log_eps`.
    pub log_eps: f64,
    pub refine_keypoints: bool,
    pub per_detector: usize,
    /// Learn dictionaries on one frame and reuse them for this many frames (1 = every frame).
    pub reuse_dict: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            denoise: DenoiseParams::default(),
            n_scales: 4,
            radii: vec![1, 2, 3],
            log_eps: -2.0,
            refine_keypoints: true,
            per_detector: 200,
            reuse_dict: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scales == 0 {
            return Err(Error::InvalidParameter("n_scales must be >= 1".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::InvalidParameter("radii must be nonempty".into()));
        }
        if let Some(r) = self.radii.iter().find(|r| !(1..=8).contains(*r)) {
            return Err(Error::InvalidParameter(format!(
                "radius {r} outside [1, 8]"
            )));
        }
        if self.log_eps.is_nan() {
            return Err(Error::InvalidParameter("log_eps is NaN".into()));
        }
        if self.reuse_dict == 0 {
            return Err(Error::InvalidParameter("reuse_dict must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies one `key=value` setting. Keys are the CLI flag names without dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value `{value}` for `{key}`")))
        }
        let d = &mut self.denoise;
        match key.trim() {
            "log-eps" => self.log_eps = parse(key, value)?,
            "scales" => self.n_scales = parse(key, value)?,
            "patch-side" => d.patch_side = parse(key, value)?,
            "dict-size" => d.dict_size = parse(key, value)?,
            "ksvd-iters" => d.k_iter = parse(key, value)?,
            "ormp-eps" => d.ormp_epsilon = parse(key, value)?,
            "lambda" => d.lambda = Some(parse(key, value)?),
            "sigma" => d.sigma = Some(parse(key, value)?),
            "max-atoms" => d.max_atoms = Some(parse(key, value)?),
            "stride" => d.stride = parse(key, value)?,
            "seed" => d.rng_seed = parse(key, value)?,
            "radii" => {
                self.radii = value
                    .split(',')
                    .map(|r| parse(key, r))
                    .collect::<Result<_>>()?
            }
            "no-refine" => self.refine_keypoints = !parse::<bool>(key, value)?,
            "per-detector" => self.per_detector = parse(key, value)?,
            "reuse-dict" => self.reuse_dict = parse(key, value)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }

    /// Applies a config file of `key=value` lines; `#` starts a comment.
    /// Keys not handled by [`PipelineConfig::set`] are returned to the caller.
    pub fn apply_file(&mut self, path: &Path) -> Result<Vec<(String, String)>> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut extra = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                message: format!("line {}: expected key=value", lineno + 1),
            })?;
            match self.set(k, v) {
                Ok(()) => {}
                Err(Error::InvalidParameter(m)) if m.starts_with("unknown config key") => {
                    extra.push((k.trim().to_string(), v.trim().to_string()))
                }
                Err(e) => return Err(e),
            }
        }
        Ok(extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.n_scales, 4);
        assert_eq!(c.radii, vec![1, 2, 3]);
        assert_eq!(c.log_eps, -2.0);
        assert_eq!(c.denoise.patch_side, 4);
        assert_eq!(c.denoise.dict_size, 64);
        assert_eq!(c.denoise.ormp_epsilon, 1e-6);
        assert_eq!(c.denoise.k_iter, 7);
        assert!(c.refine_keypoints);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_radii() {
        let mut c = PipelineConfig::default();
        c.radii = vec![];
        assert!(c.validate().is_err());
        c.radii = vec![1, 9];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_file_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\nlog-eps = 2\nradii=1,2\nno-refine=true\noverlay=true\n",
        )
        .unwrap();
        let mut c = PipelineConfig::default();
        let extra = c.apply_file(&path).unwrap();
        assert_eq!(c.log_eps, 2.0);
        assert_eq!(c.radii, vec![1, 2]);
        assert!(!c.refine_keypoints);
        assert_eq!(extra, vec![("overlay".to_string(), "true".to_string())]);
        assert!(c.set("scales", "x").is_err());
    }
}
