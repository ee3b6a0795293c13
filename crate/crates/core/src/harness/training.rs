use serde::Serialize;

/// Optimiser settings for training on distortions with an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingPreset {
    pub architecture: &'static str,
    pub optimizer: &'static str,
    pub momentum: f64,
    pub batch_size: usize,
    pub initial_learning_rate: f64,
    pub epochs: u32,
    pub decay_epochs: Vec<u32>,
    pub decay_factor: f64,
    pub class_weighting: &'static str,
    pub augmentation: &'static str,
}

impl TrainingPreset {
    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: u32) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&d| epoch >= d).count() as i32;
        self.initial_learning_rate * self.decay_factor.powi(decays)
    }
}

/// Preset for a 100- or 200-epoch run; other lengths return `None`.
pub fn training_config_preset(epochs: u32) -> Option<TrainingPreset> {
    let decay_epochs = match epochs {
        100 => vec![30, 60, 80, 90],
        200 => vec![60, 120, 160, 180],
        _ => return None,
    };
    Some(TrainingPreset {
        architecture: "resnet50-16-outputs",
        optimizer: "sgd-momentum",
        momentum: 0.997,
        batch_size: 64,
        initial_learning_rate: 0.025,
        epochs,
        decay_epochs,
        decay_factor: 0.1,
        class_weighting: "inverse-class-frequency",
        augmentation: "one manipulation per sample, manipulation and level drawn uniformly",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        let p = training_config_preset(100).unwrap();
        assert_eq!(p.decay_epochs, [30, 60, 80, 90]);
        assert!((p.learning_rate_at(95) - 0.025 * 1e-4).abs() < 1e-15);
        assert_eq!(p.learning_rate_at(0), 0.025);
        assert_eq!(training_config_preset(200).unwrap().decay_epochs, [60, 120, 160, 180]);
        assert!(training_config_preset(50).is_none());
    }
}
