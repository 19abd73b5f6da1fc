//! Stationarity, autocorrelation, residual-whiteness and decomposition
//! tools used while choosing model orders.

mod adf;
mod correlation;
mod decompose;
mod ljung_box;

pub use adf::{
    adf_test, mackinnon_critical_values, mackinnon_p_value, schwert_lags, AdfLags, AdfResult, DeterministicTerms,
};
pub use correlation::{acf, pacf, pearson_corr, AcfResult, PacfResult};
pub use decompose::{classical_decompose, DecompositionMode, DecompositionResult};
pub use ljung_box::{default_lags, ljung_box, LjungBoxResult};
