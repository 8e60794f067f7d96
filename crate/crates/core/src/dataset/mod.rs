//! In-memory dataset: per active BS, per active user, the user location and
//! its `M × |𝒦|` channel matrix, addressed by 1-based ordinals (b̄, ū).
//!
//! Ordinal b̄ follows the order of `active_BS`; ordinal ū follows global user
//! enumeration restricted to rows `active_user_first..=active_user_last`.

mod container;

pub use container::{
    decode_shard, encode_shard, entry_len, export_dataset, import_dataset, shard_file_name, shard_len, stream_export,
    ExportFormat, Manifest, ManifestEntry, ShardHeader, ShardReader, CSV_MAX_VALUES, MANIFEST_FILE, SHARD_HEADER_LEN,
    SHARD_MAGIC, SHARD_VERSION,
};

use crate::channel::{ChannelBuilder, ChannelMatrix};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::genparams::ParamSet;
use crate::geom::Vec3;
use crate::rayio::RayFile;
use crate::scene::Scene;

/// Locations taken from ray records must agree with the scene to this
/// distance (m).
const LOCATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub global_index: u64,
    pub location: Vec3,
    pub channel: ChannelMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsShard {
    pub bs_id: u32,
    pub entries: Vec<DatasetEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub params: ParamSet,
    pub scenario_name: String,
    pub shards: Vec<BsShard>,
}

/// Maps ordinals to identifiers and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    bs_ids: Vec<u32>,
    user_indices: Vec<u64>,
}

impl DatasetIndex {
    pub fn new(bs_ids: Vec<u32>, user_indices: Vec<u64>) -> Self {
        DatasetIndex { bs_ids, user_indices }
    }

    /// The index a dataset built from `params` over `scene` will have.
    pub fn from_params(params: &ParamSet, scene: &Scene) -> Result<Self> {
        Ok(DatasetIndex::new(
            params.active_bs.clone(),
            scene.users_in_row_range(params.active_user_first, params.active_user_last)?,
        ))
    }

    pub fn bs_count(&self) -> usize {
        self.bs_ids.len()
    }

    pub fn user_count(&self) -> usize {
        self.user_indices.len()
    }

    pub fn bs_ids(&self) -> &[u32] {
        &self.bs_ids
    }

    pub fn user_indices(&self) -> &[u64] {
        &self.user_indices
    }

    fn check(&self, b: usize, u: usize) -> Result<(usize, usize)> {
        let range = |n: usize| {
            if n == 0 {
                "none".to_string()
            } else {
                format!("1..={n}")
            }
        };
        if b == 0 || b > self.bs_ids.len() {
            return Err(Error::Bounds {
                what: "BS ordinal",
                value: b.to_string(),
                valid: range(self.bs_ids.len()),
            });
        }
        if u == 0 || u > self.user_indices.len() {
            return Err(Error::Bounds {
                what: "user ordinal",
                value: u.to_string(),
                valid: range(self.user_indices.len()),
            });
        }
        Ok((b - 1, u - 1))
    }

    /// (bs_id, global user index) for 1-based (b̄, ū).
    pub fn resolve(&self, b: usize, u: usize) -> Result<(u32, u64)> {
        let (bi, ui) = self.check(b, u)?;
        Ok((self.bs_ids[bi], self.user_indices[ui]))
    }

    /// Inverse of [`resolve`](Self::resolve).
    pub fn ordinals(&self, bs_id: u32, global_index: u64) -> Option<(usize, usize)> {
        let b = self.bs_ids.iter().position(|&id| id == bs_id)?;
        let u = self.user_indices.binary_search(&global_index).ok()?;
        Some((b + 1, u + 1))
    }
}

impl Dataset {
    pub fn index(&self) -> DatasetIndex {
        DatasetIndex::new(
            self.shards.iter().map(|s| s.bs_id).collect(),
            self.shards
                .first()
                .map(|s| s.entries.iter().map(|e| e.global_index).collect())
                .unwrap_or_default(),
        )
    }

    pub fn bs_count(&self) -> usize {
        self.shards.len()
    }

    pub fn user_count(&self) -> usize {
        self.shards.first().map_or(0, |s| s.entries.len())
    }

    /// Shared matrix shape (M, |𝒦|).
    pub fn dims(&self) -> (usize, usize) {
        (self.params.num_antennas(), self.params.ofdm_limit as usize)
    }

    pub fn entry(&self, b: usize, u: usize) -> Result<&DatasetEntry> {
        let bs = self.shards.len();
        let users = self.user_count();
        let probe = DatasetIndex {
            bs_ids: vec![0; bs],
            user_indices: vec![0; users],
        };
        let (bi, ui) = probe.check(b, u)?;
        Ok(&self.shards[bi].entries[ui])
    }

    pub fn get_channel(&self, b: usize, u: usize) -> Result<&ChannelMatrix> {
        Ok(&self.entry(b, u)?.channel)
    }

    pub fn get_location(&self, b: usize, u: usize) -> Result<Vec3> {
        Ok(self.entry(b, u)?.location)
    }

    /// Structural checks shared by the builder and the importer.
    pub fn check(&self) -> Result<()> {
        if self.shards.len() != self.params.active_bs.len()
            || self
                .shards
                .iter()
                .zip(&self.params.active_bs)
                .any(|(s, &id)| s.bs_id != id)
        {
            return Err(Error::Consistency("shard order does not follow active_BS".into()));
        }
        let (m, nk) = self.dims();
        let first = &self.shards[0].entries;
        for s in &self.shards {
            if s.entries.len() != first.len()
                || s.entries
                    .iter()
                    .zip(first)
                    .any(|(a, b)| a.global_index != b.global_index)
            {
                return Err(Error::Consistency(format!(
                    "BS {} covers a different user set than BS {}",
                    s.bs_id, self.shards[0].bs_id
                )));
            }
            for e in &s.entries {
                if (e.channel.rows(), e.channel.cols()) != (m, nk) {
                    return Err(Error::DimensionMismatch {
                        expected: m * nk,
                        actual: e.channel.rows() * e.channel.cols(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn get_channel(ds: &Dataset, b: usize, u: usize) -> Result<&ChannelMatrix> {
    ds.get_channel(b, u)
}

pub fn get_location(ds: &Dataset, b: usize, u: usize) -> Result<Vec3> {
    ds.get_location(b, u)
}

/// The sources for each active BS in `active_BS` order, after checking that
/// they all describe the same scenario as `scene`.
pub fn select_sources<'a>(rayfiles: &'a [RayFile], params: &ParamSet, scene: &Scene) -> Result<Vec<&'a RayFile>> {
    let mut out = Vec::with_capacity(params.active_bs.len());
    for &id in &params.active_bs {
        let rf = rayfiles
            .iter()
            .find(|r| r.header.bs_id == id)
            .ok_or(Error::MissingRayFile { bs_id: id })?;
        check_source(rf, scene)?;
        out.push(rf);
    }
    Ok(out)
}

pub(crate) fn check_source(rf: &RayFile, scene: &Scene) -> Result<()> {
    if rf.header.scenario_name != scene.name {
        return Err(Error::Consistency(format!(
            "ray file for BS {} belongs to scenario `{}`, expected `{}`",
            rf.header.bs_id, rf.header.scenario_name, scene.name
        )));
    }
    if rf.header.carrier_freq != scene.carrier_freq {
        return Err(Error::Consistency(format!(
            "ray file for BS {} was traced at {} Hz, scene carrier is {} Hz",
            rf.header.bs_id, rf.header.carrier_freq, scene.carrier_freq
        )));
    }
    Ok(())
}

/// Active users of `params` as (global index, scene position).
pub fn active_users(params: &ParamSet, scene: &Scene) -> Result<Vec<(u64, Vec3)>> {
    scene
        .users_in_row_range(params.active_user_first, params.active_user_last)?
        .into_iter()
        .map(|i| Ok((i, scene.user(i)?.position)))
        .collect()
}

/// Channel entry for one (BS, user) pair. A user absent from the ray file
/// gets a zero matrix at its scene location.
pub(crate) fn build_entry(
    rf: &RayFile,
    builder: &ChannelBuilder,
    global_index: u64,
    scene_position: Vec3,
) -> Result<DatasetEntry> {
    let bs_id = rf.header.bs_id;
    match rf.record(global_index) {
        Some(pl) => {
            if pl.user_position.distance(scene_position) > LOCATION_TOLERANCE {
                return Err(Error::Consistency(format!(
                    "ray file for BS {bs_id} places user {global_index} at {:?}, scene has {:?}",
                    pl.user_position, scene_position
                )));
            }
            Ok(DatasetEntry {
                global_index,
                location: pl.user_position,
                channel: builder.build(pl),
            })
        }
        None => {
            log::warn!("BS {bs_id}: no ray record for user {global_index}, storing a zero channel");
            let (m, nk) = builder.dims();
            Ok(DatasetEntry {
                global_index,
                location: scene_position,
                channel: ChannelMatrix::zeros(bs_id, global_index, m, nk),
            })
        }
    }
}

pub fn build_dataset(rayfiles: &[RayFile], params: &ParamSet, scene: &Scene) -> Result<Dataset> {
    build_dataset_with(rayfiles, params, scene, &Sequential)
}

/// As [`build_dataset`], evaluating users of each BS through `exec`.
pub fn build_dataset_with<E: Executor>(
    rayfiles: &[RayFile],
    params: &ParamSet,
    scene: &Scene,
    exec: &E,
) -> Result<Dataset> {
    let builder = ChannelBuilder::new(params)?;
    let sources = select_sources(rayfiles, params, scene)?;
    let users = active_users(params, scene)?;
    let mut shards = Vec::with_capacity(sources.len());
    for rf in sources {
        let entries = exec
            .map(users.len(), |i| build_entry(rf, &builder, users[i].0, users[i].1))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        shards.push(BsShard {
            bs_id: rf.header.bs_id,
            entries,
        });
    }
    Ok(Dataset {
        params: params.clone(),
        scenario_name: scene.name.clone(),
        shards,
    })
}
