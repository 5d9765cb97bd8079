use alloc::vec::Vec;

use super::{IqStream, Modulation, PhyConfig};
use crate::fft::{Direction, Radix2Fft};
use crate::{param_err, shape_err, ComplexSample, Error, Result};

pub const FFT_SIZES: [usize; 3] = [64, 128, 256];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub bin_modulation: Modulation,
    pub cp_len: usize,
    /// Active subcarriers, in the order grid rows map onto them.
    pub occupied_bins: Vec<usize>,
}

impl OfdmConfig {
    /// Quarter-length cyclic prefix, every bin but DC occupied.
    pub fn new(fft_size: usize, bin_modulation: Modulation) -> Self {
        Self {
            fft_size,
            bin_modulation,
            cp_len: fft_size / 4,
            occupied_bins: (1..fft_size).collect(),
        }
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.occupied_bins.len() * self.bin_modulation.bits_per_symbol()
    }

    pub fn validate(&self) -> Result<()> {
        if !FFT_SIZES.contains(&self.fft_size) {
            return Err(param_err!("FFT size {} not in {FFT_SIZES:?}", self.fft_size));
        }
        if !self.bin_modulation.is_psk() {
            return Err(param_err!(
                "bin modulation {} not supported for OFDM",
                self.bin_modulation
            ));
        }
        if self.cp_len >= self.fft_size {
            return Err(param_err!("cyclic prefix {} not shorter than FFT size", self.cp_len));
        }
        if self.occupied_bins.is_empty() {
            return Err(param_err!("no occupied bins"));
        }
        let mut seen = alloc::vec![false; self.fft_size];
        for &b in &self.occupied_bins {
            if b == 0 || b >= self.fft_size {
                return Err(param_err!("occupied bin {b} must lie in 1..{}", self.fft_size));
            }
            if core::mem::replace(&mut seen[b], true) {
                return Err(param_err!("occupied bin {b} listed twice"));
            }
        }
        Ok(())
    }
}

impl From<OfdmConfig> for PhyConfig {
    fn from(c: OfdmConfig) -> Self {
        PhyConfig::Ofdm(c)
    }
}

/// Frequency-domain payload: one column of `bins` symbols per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    bins: usize,
    data: Vec<ComplexSample>,
}

impl SymbolGrid {
    pub fn new(bins: usize, data: Vec<ComplexSample>) -> Result<Self> {
        if bins == 0 || data.len() % bins != 0 {
            return Err(shape_err!("{} grid entries do not fill columns of {bins}", data.len()));
        }
        Ok(Self { bins, data })
    }

    pub fn from_columns(columns: &[Vec<ComplexSample>]) -> Result<Self> {
        let bins = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != bins) {
            return Err(shape_err!("ragged OFDM grid columns"));
        }
        Self::new(bins, columns.concat())
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn n_symbols(&self) -> usize {
        self.data.len() / self.bins
    }

    pub fn column(&self, i: usize) -> &[ComplexSample] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }

    pub fn as_slice(&self) -> &[ComplexSample] {
        &self.data
    }
}

/// Places each grid column on the occupied bins, inverse-FFTs with a
/// `1/sqrt(N)` scale and prepends the cyclic prefix.
pub fn ofdm_modulate(grid: &SymbolGrid, cfg: &OfdmConfig, sample_rate_hz: f64) -> Result<IqStream> {
    cfg.validate()?;
    if grid.bins() != cfg.occupied_bins.len() {
        return Err(shape_err!(
            "grid has {} rows but {} bins are occupied",
            grid.bins(),
            cfg.occupied_bins.len()
        ));
    }
    let n = cfg.fft_size;
    let fft = Radix2Fft::new(n)?;
    let scale = 1.0 / libm::sqrt(n as f64);
    let mut out = Vec::with_capacity(grid.n_symbols() * cfg.symbol_len());
    let mut buf = alloc::vec![ComplexSample::new(0.0, 0.0); n];
    for i in 0..grid.n_symbols() {
        buf.fill(ComplexSample::new(0.0, 0.0));
        for (&bin, &s) in cfg.occupied_bins.iter().zip(grid.column(i)) {
            buf[bin] = s;
        }
        fft.process(&mut buf, Direction::Inverse);
        buf.iter_mut().for_each(|v| *v *= scale);
        out.extend_from_slice(&buf[n - cfg.cp_len..]);
        out.extend_from_slice(&buf);
    }
    Ok(IqStream::new(out, sample_rate_hz))
}

/// Strips the cyclic prefix of every complete OFDM symbol starting at
/// `sync_offset`, forward-FFTs and reads the occupied bins. A trailing
/// partial symbol is discarded.
pub fn ofdm_demodulate(x: &IqStream, cfg: &OfdmConfig, sync_offset: usize) -> Result<SymbolGrid> {
    cfg.validate()?;
    let sym_len = cfg.symbol_len();
    let needed = sync_offset + sym_len;
    if x.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: x.len(),
        });
    }
    let n = cfg.fft_size;
    let fft = Radix2Fft::new(n)?;
    let scale = 1.0 / libm::sqrt(n as f64);
    let count = (x.len() - sync_offset) / sym_len;
    let mut data = Vec::with_capacity(count * cfg.occupied_bins.len());
    let mut buf = alloc::vec![ComplexSample::new(0.0, 0.0); n];
    for i in 0..count {
        let start = sync_offset + i * sym_len + cfg.cp_len;
        buf.copy_from_slice(&x.samples[start..start + n]);
        fft.process(&mut buf, Direction::Forward);
        data.extend(cfg.occupied_bins.iter().map(|&b| buf[b] * scale));
    }
    SymbolGrid::new(cfg.occupied_bins.len(), data)
}

/// Maps bits (MSB first per bin) onto whole OFDM symbols and modulates.
pub fn ofdm_modulate_bits(bits: &[u8], cfg: &OfdmConfig, sample_rate_hz: f64) -> Result<IqStream> {
    cfg.validate()?;
    let per = cfg.bits_per_ofdm_symbol();
    if bits.len() % per != 0 {
        return Err(shape_err!("{} bits do not fill OFDM symbols of {per} bits", bits.len()));
    }
    let c = cfg.bin_modulation.constellation();
    let bps = cfg.bin_modulation.bits_per_symbol();
    let data = bits.chunks_exact(bps).map(|b| c.map(b)).collect();
    ofdm_modulate(&SymbolGrid::new(cfg.occupied_bins.len(), data)?, cfg, sample_rate_hz)
}

pub fn ofdm_demodulate_bits(x: &IqStream, cfg: &OfdmConfig, sync_offset: usize) -> Result<Vec<u8>> {
    let grid = ofdm_demodulate(x, cfg, sync_offset)?;
    let c = cfg.bin_modulation.constellation();
    let mut bits = Vec::with_capacity(grid.as_slice().len() * cfg.bin_modulation.bits_per_symbol());
    for &s in grid.as_slice() {
        c.push_bits(c.decide(s), &mut bits);
    }
    Ok(bits)
}
