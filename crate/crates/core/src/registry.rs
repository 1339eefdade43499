//! Interchangeable correlation-function methods behind one trait, looked up by name.

use crate::cmd::{centroid_correlation_on, CentroidEnsemble, CentroidField, CorrelationOptions};
use crate::epac::{
    epac2_correlation, epac2_zero_temperature, epac_correlation, epac_zero_temperature,
    EpacParameters,
};
use crate::error::{Error, Result};
use crate::oracle::{
    exact_canonical_correlation, exact_correlation, zero_temperature_correlation, EigenSystem,
};
use crate::series::{uniform_step, CorrelationSeries, SeriesKind};

/// Centroid dynamics inputs: ensemble, force field with its window, options.
pub struct CentroidInputs<'a> {
    pub ensemble: &'a CentroidEnsemble,
    pub field: &'a dyn CentroidField,
    pub window: (f64, f64),
    pub options: CorrelationOptions,
}

/// Whatever the methods may draw on; each method states what it needs.
#[derive(Default)]
pub struct CorrelationInputs<'a> {
    /// `None` is zero temperature.
    pub beta: Option<f64>,
    pub eigensystem: Option<&'a EigenSystem>,
    pub epac: Option<EpacParameters>,
    pub centroid: Option<CentroidInputs<'a>>,
}

impl<'a> CorrelationInputs<'a> {
    fn eigensystem(&self, method: &str) -> Result<&'a EigenSystem> {
        self.eigensystem
            .ok_or_else(|| missing(method, "an eigensystem"))
    }

    fn beta(&self, method: &str) -> Result<f64> {
        self.beta.ok_or_else(|| missing(method, "a finite beta"))
    }

    fn epac(&self, method: &str) -> Result<&EpacParameters> {
        self.epac
            .as_ref()
            .ok_or_else(|| missing(method, "EPAC parameters"))
    }
}

fn missing(method: &str, what: &str) -> Error {
    Error::InvalidParameter(format!("method `{method}` needs {what}"))
}

pub trait CorrelationMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> SeriesKind;
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries>;
}

struct Exact;
struct Canonical;
struct ZeroTemperature;
struct Cmd;
struct Epac;
struct Epac2;
struct EpacZeroTemperature;

impl CorrelationMethod for Exact {
    fn name(&self) -> &'static str {
        "exact"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::Exact
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        exact_correlation(
            inputs.eigensystem(self.name())?,
            inputs.beta(self.name())?,
            times,
        )
    }
}

impl CorrelationMethod for Canonical {
    fn name(&self) -> &'static str {
        "canonical"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::Canonical
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        exact_canonical_correlation(
            inputs.eigensystem(self.name())?,
            inputs.beta(self.name())?,
            times,
        )
    }
}

impl CorrelationMethod for ZeroTemperature {
    fn name(&self) -> &'static str {
        "zero-temperature"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::ZeroTemperature
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        zero_temperature_correlation(inputs.eigensystem(self.name())?, times)
    }
}

impl CorrelationMethod for Cmd {
    fn name(&self) -> &'static str {
        "cmd"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::Cmd
    }
    /// The output grid is the options' grid; `times` must coincide with it.
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        let c = inputs
            .centroid
            .as_ref()
            .ok_or_else(|| missing(self.name(), "a centroid ensemble"))?;
        let step = uniform_step(times)?;
        let every = (step / c.options.dt).round() as usize;
        if every == 0 || (every as f64 * c.options.dt - step).abs() > 1e-9 * step || times[0] != 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "cmd output times must start at 0 with a step that is a multiple of dt = {}",
                c.options.dt
            )));
        }
        let opts = CorrelationOptions {
            output_every: every,
            t_max: times[times.len() - 1],
            ..c.options.clone()
        };
        centroid_correlation_on(c.ensemble, c.field, c.window, &opts)
    }
}

impl CorrelationMethod for Epac {
    fn name(&self) -> &'static str {
        "epac"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::Epac
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        epac_correlation(inputs.epac(self.name())?, times)
    }
}

impl CorrelationMethod for Epac2 {
    fn name(&self) -> &'static str {
        "epac2"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::Epac2
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        let p = inputs.epac(self.name())?;
        if p.beta.is_some() {
            epac2_correlation(p, times)
        } else {
            epac2_zero_temperature(p, times)
        }
    }
}

impl CorrelationMethod for EpacZeroTemperature {
    fn name(&self) -> &'static str {
        "epac-zero-temperature"
    }
    fn kind(&self) -> SeriesKind {
        SeriesKind::EpacZeroTemperature
    }
    fn compute(&self, inputs: &CorrelationInputs, times: &[f64]) -> Result<CorrelationSeries> {
        let p = EpacParameters {
            beta: None,
            ..*inputs.epac(self.name())?
        };
        epac_zero_temperature(&p, times)
    }
}

/// Name-keyed collection of correlation methods.
pub struct MethodRegistry {
    methods: Vec<Box<dyn CorrelationMethod>>,
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self {
            methods: vec![
                Box::new(Exact),
                Box::new(Canonical),
                Box::new(ZeroTemperature),
                Box::new(Cmd),
                Box::new(Epac),
                Box::new(Epac2),
                Box::new(EpacZeroTemperature),
            ],
        }
    }
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: Vec::new(),
        }
    }

    /// Adds a method; a method with the same name is replaced.
    pub fn register(&mut self, method: Box<dyn CorrelationMethod>) {
        self.methods.retain(|m| m.name() != method.name());
        self.methods.push(method);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn CorrelationMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                family: "correlation method",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn compute(
        &self,
        name: &str,
        inputs: &CorrelationInputs,
        times: &[f64],
    ) -> Result<CorrelationSeries> {
        self.get(name)?.compute(inputs, times)
    }
}
