//! Versioned binary checkpoints: a magic/version header followed by named
//! tensor records (length-prefixed name, rank, dims, little-endian f64
//! payload). Model hyperparameters, the epoch counter, and Adam moments
//! ride along as reserved-name records, so inference needs no side config
//! and resumed training continues bit-exactly.

use crate::adam::AdamState;
use crate::config::{EncoderConfig, HeadSelect, ModelConfig};
use crate::model::Net;
use crate::{NetError, Result};
use groupsod_tensor::Tensor;
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GSODCKPT";
const FORMAT_VERSION: u32 = 1;

/// A loaded checkpoint: the rebuilt network plus optimizer state when the
/// checkpoint was written mid-training.
pub struct Snapshot {
    pub net: Net,
    pub adam: Option<AdamState>,
    /// Epochs already completed.
    pub epoch: usize,
}

fn bad(what: impl Into<String>) -> NetError {
    NetError::Checkpoint(what.into())
}

fn write_record(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for d in shape {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn meta_records(net: &Net, epoch: usize) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let c = &net.config;
    let head_select = match c.head_select {
        HeadSelect::First => 0.0,
        HeadSelect::Mean => 1.0,
    };
    vec![
        ("meta.input_size".into(), vec![1], vec![c.input_size as f64]),
        (
            "meta.level_channels".into(),
            vec![5],
            c.level_channels.iter().map(|&v| v as f64).collect(),
        ),
        ("meta.trunk_channels".into(), vec![1], vec![c.trunk_channels as f64]),
        ("meta.ca_reduction".into(), vec![1], vec![c.ca_reduction as f64]),
        ("meta.mpm_rounds".into(), vec![1], vec![c.mpm_rounds as f64]),
        (
            "meta.encoder".into(),
            vec![4],
            vec![
                c.encoder.dim as f64,
                c.encoder.heads as f64,
                c.encoder.layers as f64,
                c.encoder.mlp_dim as f64,
            ],
        ),
        ("meta.ppa_window".into(), vec![1], vec![c.ppa_window as f64]),
        ("meta.head_select".into(), vec![1], vec![head_select]),
        ("meta.epoch".into(), vec![1], vec![epoch as f64]),
    ]
}

/// Serialises the network (and, when given, optimizer state) to `path`.
pub fn save_checkpoint(
    path: &Path,
    net: &Net,
    training: Option<(&AdamState, usize)>,
) -> Result<()> {
    let mut records = 0u64;
    let mut body = Vec::new();
    for id in net.store.ids() {
        let t = net.store.get(id);
        write_record(&mut body, net.store.name(id), t.shape(), t.data());
        records += 1;
    }
    let epoch = training.map(|(_, e)| e).unwrap_or(0);
    for (name, shape, data) in meta_records(net, epoch) {
        write_record(&mut body, &name, &shape, &data);
        records += 1;
    }
    if let Some((adam, _)) = training {
        write_record(&mut body, "opt.step", &[1], &[adam.step as f64]);
        records += 1;
        for (idx, id) in net.store.ids().enumerate() {
            let name = net.store.name(id);
            let shape = net.store.get(id).shape();
            let (m, v) = adam.moments(idx);
            write_record(&mut body, &format!("opt.m.{name}"), shape, m);
            write_record(&mut body, &format!("opt.v.{name}"), shape, v);
            records += 2;
        }
    }

    let mut out = Vec::with_capacity(body.len() + 24);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&records.to_le_bytes());
    out.extend_from_slice(&body);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| NetError::io(dir, e))?;
        }
    }
    std::fs::write(path, out).map_err(|e| NetError::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(bad(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        b.copy_from_slice(self.take(4)?);
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(b))
    }
}

fn read_records(bytes: &[u8]) -> Result<BTreeMap<String, (Vec<usize>, Vec<f64>)>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let count = r.u64()?;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| bad("record name is not UTF-8"))?;
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let numel: usize = shape.iter().product();
        let payload = r.take(numel * 8)?;
        let data: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if map.insert(name.clone(), (shape, data)).is_some() {
            return Err(bad(format!("duplicate record {name:?}")));
        }
    }
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(map)
}

fn scalar(map: &BTreeMap<String, (Vec<usize>, Vec<f64>)>, name: &str) -> Result<f64> {
    let (_, data) = map.get(name).ok_or_else(|| bad(format!("missing {name}")))?;
    if data.len() != 1 {
        return Err(bad(format!("{name} is not a scalar")));
    }
    Ok(data[0])
}

fn config_from(map: &BTreeMap<String, (Vec<usize>, Vec<f64>)>) -> Result<ModelConfig> {
    let channels = map
        .get("meta.level_channels")
        .ok_or_else(|| bad("missing meta.level_channels"))?;
    if channels.1.len() != 5 {
        return Err(bad("meta.level_channels must have 5 entries"));
    }
    let enc = map
        .get("meta.encoder")
        .ok_or_else(|| bad("missing meta.encoder"))?;
    if enc.1.len() != 4 {
        return Err(bad("meta.encoder must have 4 entries"));
    }
    let mut level_channels = [0usize; 5];
    for (dst, src) in level_channels.iter_mut().zip(&channels.1) {
        *dst = *src as usize;
    }
    Ok(ModelConfig {
        input_size: scalar(map, "meta.input_size")? as usize,
        level_channels,
        trunk_channels: scalar(map, "meta.trunk_channels")? as usize,
        ca_reduction: scalar(map, "meta.ca_reduction")? as usize,
        mpm_rounds: scalar(map, "meta.mpm_rounds")? as usize,
        encoder: EncoderConfig {
            dim: enc.1[0] as usize,
            heads: enc.1[1] as usize,
            layers: enc.1[2] as usize,
            mlp_dim: enc.1[3] as usize,
        },
        ppa_window: scalar(map, "meta.ppa_window")? as usize,
        head_select: if scalar(map, "meta.head_select")? == 1.0 {
            HeadSelect::Mean
        } else {
            HeadSelect::First
        },
    })
}

/// Loads and validates a checkpoint: every model parameter must be present
/// with the exact shape, and nothing unknown may remain.
pub fn load_checkpoint(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| NetError::io(path, e))?;
    let mut map = read_records(&bytes)?;

    let config = config_from(&map)?;
    let epoch = scalar(&map, "meta.epoch")? as usize;
    let mut net = Net::init(config, 0)?;

    for id in net.store.ids().collect::<Vec<_>>() {
        let name = net.store.name(id).to_string();
        let (shape, data) = map
            .remove(&name)
            .ok_or_else(|| bad(format!("missing parameter {name:?}")))?;
        let expected = net.store.get(id).shape().to_vec();
        if shape != expected {
            return Err(bad(format!(
                "parameter {name:?} has shape {shape:?}, model expects {expected:?}"
            )));
        }
        *net.store.get_mut(id) = Tensor::new(shape, data).map_err(NetError::from)?;
    }

    let adam = if map.contains_key("opt.step") {
        let step = scalar(&map, "opt.step")? as u64;
        map.remove("opt.step");
        let mut adam = AdamState::new(&net.store);
        adam.step = step;
        for (idx, id) in net.store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let name = net.store.name(id).to_string();
            let numel = net.store.get(id).numel();
            let (m_rec, v_rec) = (
                map.remove(&format!("opt.m.{name}"))
                    .ok_or_else(|| bad(format!("missing opt.m.{name}")))?,
                map.remove(&format!("opt.v.{name}"))
                    .ok_or_else(|| bad(format!("missing opt.v.{name}")))?,
            );
            if m_rec.1.len() != numel || v_rec.1.len() != numel {
                return Err(bad(format!("optimizer moments for {name:?} have wrong size")));
            }
            let (m, v) = adam.moments_mut(idx);
            *m = m_rec.1;
            *v = v_rec.1;
        }
        Some(adam)
    } else {
        None
    };

    for name in map.keys() {
        if !name.starts_with("meta.") {
            return Err(bad(format!("unexpected record {name:?}")));
        }
    }

    Ok(Snapshot { net, adam, epoch })
}
