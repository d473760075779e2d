use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gpk_core::{GibbsModel, VTable};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Pitman-Yor, V(n,k) = (theta+alpha)_{k-1, alpha} / (theta+1)_{n-1}.
    Py,
    /// Dirichlet process (alpha = 0).
    Dp,
    /// Explicit V(n, k) table read from --table.
    Table,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, global = true, value_enum, default_value = "py")]
    pub model: ModelKind,
    /// Discount; defaults to 0.5 for py.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Concentration; defaults to 0.5 for py and 1 for dp.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// JSON table {"alpha": a, "n_max": N, "V": [[V11], [V21, V22], ...]}.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
}

impl ModelArgs {
    /// Builds and validates the model; tables must satisfy the backward
    /// recursion.
    pub fn build(&self) -> Result<GibbsModel, CliError> {
        match self.model {
            ModelKind::Table => Ok(GibbsModel::from_table(self.read_table()?)?),
            _ => self.closed_form(),
        }
    }

    /// Like [`ModelArgs::build`] but accepts tables that fail the recursion,
    /// so that verification can report where they fail.
    pub fn build_unchecked(&self) -> Result<GibbsModel, CliError> {
        match self.model {
            ModelKind::Table => Ok(GibbsModel::from_table_unchecked(self.read_table()?)),
            _ => self.closed_form(),
        }
    }

    fn closed_form(&self) -> Result<GibbsModel, CliError> {
        if self.table.is_some() {
            return Err(CliError::Usage("--table requires --model table".into()));
        }
        let model = match self.model {
            ModelKind::Py => {
                GibbsModel::pitman_yor(self.alpha.unwrap_or(0.5), self.theta.unwrap_or(0.5))?
            }
            ModelKind::Dp => {
                if self.alpha.is_some_and(|a| a != 0.0) {
                    return Err(CliError::Usage("--model dp has alpha = 0".into()));
                }
                GibbsModel::dirichlet(self.theta.unwrap_or(1.0))?
            }
            ModelKind::Table => unreachable!(),
        };
        Ok(model)
    }

    fn read_table(&self) -> Result<VTable, CliError> {
        if self.alpha.is_some() || self.theta.is_some() {
            return Err(CliError::Usage(
                "--model table reads alpha from the table; drop --alpha/--theta".into(),
            ));
        }
        let path = self
            .table
            .as_ref()
            .ok_or_else(|| CliError::Usage("--model table needs --table PATH".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        log::info!("read table from {}", path.display());
        Ok(VTable::from_json_str(&text)?)
    }
}
