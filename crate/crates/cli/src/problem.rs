use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use wick_core::{
    pair_form, FieldOperator, OperatorString, PairProduct, PropagatorProvider, Sign, Statistics, TableEntry, TableFile,
    TablePropagator,
};

use crate::CliError;

/// Input document shared by `evaluate`, `oracle-check` and `laplace`.
///
/// Exactly one of `operators` (an arbitrary interleaving) or `pair_products`
/// (already grouped pairs, one list per statistics) must be present.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub operators: Option<Vec<FieldOperator>>,
    #[serde(default)]
    pub pair_products: Option<Vec<PairProduct>>,
    #[serde(default)]
    pub provider: ProviderSection,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProviderSection {
    #[default]
    Symbolic,
    Table {
        #[serde(default)]
        entries: Vec<TableEntry>,
        /// Path to a table file, relative to the problem file.
        #[serde(default)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub oracle_limit: Option<usize>,
    /// 1-based row subset for `laplace`.
    #[serde(default)]
    pub rows: Option<Vec<usize>>,
}

/// A problem after validation: the pair products of each statistics, the
/// sign relating them to the input string, and the resolved provider.
#[derive(Debug, Clone)]
pub struct Problem {
    pub fermi: PairProduct,
    pub bose: PairProduct,
    pub sign: Sign,
    pub string: OperatorString,
    pub provider: PropagatorProvider,
    pub options: Options,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn resolve(self, base: Option<&Path>) -> Result<Problem, CliError> {
        let provider = match self.provider {
            ProviderSection::Symbolic => PropagatorProvider::Symbolic,
            ProviderSection::Table { mut entries, file } => {
                if let Some(file) = file {
                    let path = base.map(|b| b.join(&file)).unwrap_or(file);
                    let text =
                        fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    let table: TableFile = serde_json::from_str(&text)
                        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
                    entries.extend(table.entries);
                }
                PropagatorProvider::Table(TablePropagator::from_file(&TableFile { entries })?)
            }
        };
        let (fermi, bose, sign, string) = match (self.operators, self.pair_products) {
            (Some(ops), None) => {
                let string = OperatorString::new(ops);
                let form = pair_form(&string)?;
                (form.fermi, form.bose, form.sign, string)
            }
            (None, Some(products)) => {
                let mut fermi = PairProduct::empty(Statistics::Fermi);
                let mut bose = PairProduct::empty(Statistics::Bose);
                for p in products {
                    match p.statistics {
                        Statistics::Fermi => fermi.pairs.extend(p.pairs),
                        Statistics::Bose => bose.pairs.extend(p.pairs),
                    }
                }
                let string = fermi.to_operator_string().concat(&bose.to_operator_string());
                (fermi, bose, Sign::Plus, string)
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Schema("give either `operators` or `pair_products`, not both".into()))
            }
            (None, None) => return Err(CliError::Schema("missing field `operators` or `pair_products`".into())),
        };
        Ok(Problem { fermi, bose, sign, string, provider, options: self.options })
    }
}
