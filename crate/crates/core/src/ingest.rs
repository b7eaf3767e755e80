//! Survey ingestion: household rows to a weighted sample of normalized
//! per-capita incomes.
//!
//! Two delimited text layouts are accepted, each with a header row:
//!
//! * household: `total_income,occupants,weight`
//! * aggregated: `income,multiplicity`
//!
//! Fields may be separated by commas or tabs (detected from the header).
//! Extra columns are ignored.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Household,
    Aggregated,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "household" => Ok(Self::Household),
            "aggregated" => Ok(Self::Aggregated),
            other => Err(format!("unknown input format `{other}` (household | aggregated)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Household => "household",
            Self::Aggregated => "aggregated",
        })
    }
}

/// A rejected data row. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no data rows")]
    EmptyInput,
    #[error("header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("{} invalid row(s); first: {}", .0.len(), .0[0])]
    InvalidRows(Vec<RowError>),
    #[error("sample has no positive income; cannot normalize")]
    DegenerateSample,
}

/// One surveyed household.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdRecord {
    /// Household income in currency units.
    pub total_income: f64,
    pub occupants: u32,
    /// Expansion factor to the national population.
    pub weight: f64,
}

/// A per-capita income and how many persons receive it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedIncome {
    pub income: f64,
    pub multiplicity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    /// Income in units of the population mean.
    pub x: f64,
    pub multiplicity: f64,
}

/// Weighted sample of dimensionless incomes.
///
/// Samples produced by [`normalize_incomes`] have unit weighted mean.
/// Samples built with [`NormalizedSample::from_entries`] (model draws,
/// bootstrap resamples) are taken as already expressed in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSample {
    entries: Vec<SampleEntry>,
    mean_income_raw: f64,
    total_population: f64,
}

impl NormalizedSample {
    /// Wraps entries that are already in normalized units. The recorded raw
    /// mean is 1.
    ///
    /// Panics if an entry has negative or non-finite income or a
    /// non-positive multiplicity.
    pub fn from_entries(entries: Vec<SampleEntry>) -> Self {
        for e in &entries {
            assert!(e.x.is_finite() && e.x >= 0.0, "income must be finite and ≥ 0, got {}", e.x);
            assert!(
                e.multiplicity.is_finite() && e.multiplicity > 0.0,
                "multiplicity must be positive, got {}",
                e.multiplicity
            );
        }
        let total_population = entries.iter().map(|e| e.multiplicity).sum();
        Self {
            entries,
            mean_income_raw: 1.0,
            total_population,
        }
    }

    /// Unit-multiplicity sample from plain values.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        Self::from_entries(
            values
                .into_iter()
                .map(|x| SampleEntry { x, multiplicity: 1.0 })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[SampleEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<SampleEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The mean raw income `⟨x'⟩` (currency units) the sample was divided by.
    pub fn mean_income_raw(&self) -> f64 {
        self.mean_income_raw
    }

    pub fn total_population(&self) -> f64 {
        self.total_population
    }

    pub fn weighted_mean(&self) -> f64 {
        self.total_income() / self.total_population
    }

    pub fn total_income(&self) -> f64 {
        self.entries.iter().map(|e| e.x * e.multiplicity).sum()
    }

    /// Persons with zero income.
    pub fn zero_income_population(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.x == 0.0)
            .map(|e| e.multiplicity)
            // Folded from +0.0: an empty float `sum` is -0.0.
            .fold(0.0, |acc, m| acc + m)
    }

    pub fn zero_income_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.x == 0.0).count()
    }

    pub fn max_x(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.x).reduce(f64::max)
    }

    /// The sample without its zero-income entries, keeping the same units.
    pub fn positive_part(&self) -> NormalizedSample {
        let entries: Vec<SampleEntry> = self.entries.iter().copied().filter(|e| e.x > 0.0).collect();
        let total_population = entries.iter().map(|e| e.multiplicity).sum();
        NormalizedSample {
            entries,
            mean_income_raw: self.mean_income_raw,
            total_population,
        }
    }

    /// Entries with `x ≥ threshold`.
    pub fn tail(&self, threshold: f64) -> Vec<SampleEntry> {
        self.entries.iter().copied().filter(|e| e.x >= threshold).collect()
    }

    /// Raw incomes (currency units) recovered from the normalization.
    pub fn to_weighted_incomes(&self) -> Vec<WeightedIncome> {
        self.entries
            .iter()
            .map(|e| WeightedIncome {
                income: e.x * self.mean_income_raw,
                multiplicity: e.multiplicity,
            })
            .collect()
    }
}

fn read_table<R: Read>(mut source: R) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>), IngestError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.iter().all(|field| field.is_empty()) {
            continue;
        }
        let line = row.position().map_or(0, |p| p.line());
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok((headers, rows))
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or(IngestError::MissingColumn(name))
}

fn field<'r>(row: &'r csv::StringRecord, index: usize, name: &str) -> Result<&'r str, String> {
    match row.get(index) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(format!("missing value for `{name}`")),
    }
}

fn real(row: &csv::StringRecord, index: usize, name: &str) -> Result<f64, String> {
    let raw = field(row, index, name)?;
    let value: f64 = raw
        .parse()
        .map_err(|_| format!("`{name}` is not a number: `{raw}`"))?;
    if !value.is_finite() {
        return Err(format!("`{name}` is not finite: `{raw}`"));
    }
    Ok(value)
}

/// Parses the household layout. Every invalid row is collected and reported.
pub fn parse_household_records<R: Read>(source: R) -> Result<Vec<HouseholdRecord>, IngestError> {
    let (headers, rows) = read_table(source)?;
    let income_col = column(&headers, "total_income")?;
    let occupants_col = column(&headers, "occupants")?;
    let weight_col = column(&headers, "weight")?;

    let mut records = Vec::with_capacity(rows.len());
    let mut errors = Vec::new();
    for (line, row) in rows {
        let parsed = (|| {
            let total_income = real(&row, income_col, "total_income")?;
            if total_income < 0.0 {
                return Err(format!("`total_income` must be ≥ 0, got {total_income}"));
            }
            let raw = field(&row, occupants_col, "occupants")?;
            let occupants: u32 = raw
                .parse()
                .map_err(|_| format!("`occupants` must be a positive integer, got `{raw}`"))?;
            if occupants == 0 {
                return Err("`occupants` must be ≥ 1".to_string());
            }
            let weight = real(&row, weight_col, "weight")?;
            if weight <= 0.0 {
                return Err(format!("`weight` must be > 0, got {weight}"));
            }
            Ok(HouseholdRecord {
                total_income,
                occupants,
                weight,
            })
        })();
        match parsed {
            Ok(record) => records.push(record),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(IngestError::InvalidRows(errors))
    }
}

/// Parses the pre-aggregated layout.
pub fn parse_aggregated<R: Read>(source: R) -> Result<Vec<WeightedIncome>, IngestError> {
    let (headers, rows) = read_table(source)?;
    let income_col = column(&headers, "income")?;
    let multiplicity_col = column(&headers, "multiplicity")?;

    let mut incomes = Vec::with_capacity(rows.len());
    let mut errors = Vec::new();
    for (line, row) in rows {
        let parsed = (|| {
            let income = real(&row, income_col, "income")?;
            if income < 0.0 {
                return Err(format!("`income` must be ≥ 0, got {income}"));
            }
            let multiplicity = real(&row, multiplicity_col, "multiplicity")?;
            if multiplicity <= 0.0 {
                return Err(format!("`multiplicity` must be > 0, got {multiplicity}"));
            }
            Ok(WeightedIncome { income, multiplicity })
        })();
        match parsed {
            Ok(w) => incomes.push(w),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(incomes)
    } else {
        Err(IngestError::InvalidRows(errors))
    }
}

/// Reads either layout into per-capita weighted incomes.
pub fn load_incomes<R: Read>(source: R, format: InputFormat) -> Result<Vec<WeightedIncome>, IngestError> {
    match format {
        InputFormat::Household => Ok(equivalize_and_expand(&parse_household_records(source)?)),
        InputFormat::Aggregated => parse_aggregated(source),
    }
}

/// Equal-split equivalence scale: each occupant receives an equal share of
/// the household income and counts `weight` times in the population.
pub fn equivalize_and_expand(records: &[HouseholdRecord]) -> Vec<WeightedIncome> {
    records
        .iter()
        .map(|r| {
            let occupants = f64::from(r.occupants);
            WeightedIncome {
                income: r.total_income / occupants,
                multiplicity: occupants * r.weight,
            }
        })
        .collect()
}

/// Divides every income by the multiplicity-weighted mean income.
pub fn normalize_incomes(incomes: &[WeightedIncome]) -> Result<NormalizedSample, IngestError> {
    let total_population: f64 = incomes.iter().map(|w| w.multiplicity).sum();
    let total_income: f64 = incomes.iter().map(|w| w.income * w.multiplicity).sum();
    if incomes.is_empty() || total_income <= 0.0 || !total_income.is_finite() {
        return Err(IngestError::DegenerateSample);
    }
    let mean = total_income / total_population;
    let entries = incomes
        .iter()
        .map(|w| SampleEntry {
            x: w.income / mean,
            multiplicity: w.multiplicity,
        })
        .collect();
    Ok(NormalizedSample {
        entries,
        mean_income_raw: mean,
        total_population,
    })
}
