use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use super::load::{parse_series_csv, DatasetConfig};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Source of remote CSV bodies.
pub trait Fetcher: Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>>;
}

/// Plain HTTP(S) GET.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpFetcher;

impl Fetcher for HttpFetcher {
    fn get(&self, url: &str) -> Result<Vec<u8>> {
        let mut response = ureq::get(url).call().map_err(|e| Error::Network(format!("{url}: {e}")))?;
        response
            .body_mut()
            .read_to_vec()
            .map_err(|e| Error::Network(format!("{url}: {e}")))
    }
}

/// Cache file for `url` as fetched on `date`.
pub fn cache_path(cache_dir: &Path, url: &str, date: NaiveDate) -> PathBuf {
    let mut h = Sha256::new();
    h.update(url.as_bytes());
    h.update(b"\n");
    h.update(date.format("%Y-%m-%d").to_string().as_bytes());
    cache_dir.join(format!("{}.csv", hex::encode(h.finalize())))
}

/// Returns the cached body for `(url, date)` or downloads it. A body that
/// fails to parse is never written to the cache.
pub fn fetch_indicator_csv(
    url: &str,
    config: &DatasetConfig,
    cache_dir: &Path,
    date: NaiveDate,
    allow_network: bool,
    fetcher: &dyn Fetcher,
) -> Result<TimeSeries> {
    let path = cache_path(cache_dir, url, date);
    if path.exists() {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        return parse_series_csv(&bytes, config, &path.display().to_string());
    }
    if !allow_network {
        return Err(Error::Network(format!(
            "{url} is not cached for {date} and network access is disabled (pass --allow-network)"
        )));
    }
    let body = fetcher.get(url)?;
    let series = parse_series_csv(&body, config, url)?;
    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let tmp = path.with_extension("part");
    std::fs::write(&tmp, &body).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(series)
}
