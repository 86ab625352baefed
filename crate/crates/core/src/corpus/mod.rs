//! Audio ingestion, dataset construction and augmentation.

pub mod augment;
pub mod dataset;
pub mod synth;
pub mod wav;

pub use augment::{inject_noise_at_snr, noise_variance, snr_at_epoch, AugmentError, SnrSchedule};
pub use dataset::{
    build_dataset, chunk_and_gate, list_wav_files, read_manifest, write_manifest, ChunkManifestEntry, DatasetError,
    DatasetOptions, DatasetReport,
};
pub use synth::{desk_clip, desk_corpus};
pub use wav::{read_audio, write_audio, AudioIoError, SampleFormatKind, WriteSummary};
