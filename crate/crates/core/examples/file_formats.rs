//! Writes and reads the two binary formats: per-utterance embeddings (LWE1)
//! and per-layer Gaussian summaries (LWS1).

use layerprobe::store::{
    encode_embeddings, read_embedding_file, read_embedding_header, read_summary_header,
    read_summary_layer, write_embedding_file, write_summary_file, UtteranceEmbeddings,
};
use layerprobe::GaussianSummary;

fn main() -> layerprobe::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");

    // 2 layers, 3 frames of dimension 2, stored layer by layer, frame-major
    let data = vec![
        0.0, 1.0, 2.0, 3.0, 4.0, 5.0, // layer 0
        1.0, 1.0, 1.0, 1.0, 1.0, 1.0, // layer 1
    ];
    let utt = UtteranceEmbeddings::new("spk1_0001", 2, 2, 3, data)?;
    let bytes = encode_embeddings(&utt)?;
    println!("LWE1 utterance: {} bytes, magic {:?}", bytes.len(), std::str::from_utf8(&bytes[..4]).unwrap());

    let path = dir.path().join("spk1_0001.lwe");
    write_embedding_file(&utt, &path)?;
    let header = read_embedding_header(&path)?;
    println!(
        "header: id={} layers={} dim={} frames={}",
        header.utterance_id, header.n_layers, header.dim, header.n_frames
    );
    let back = read_embedding_file(&path)?;
    println!("layer 0 frame means: {:?}", back.layer_mean(0));

    let summaries = vec![
        GaussianSummary::new(3, vec![2.0, 3.0], vec![4.0, 4.0, 4.0, 4.0])?,
        GaussianSummary::new(3, vec![1.0, 1.0], vec![0.0; 4])?,
    ];
    let lws = dir.path().join("system.lws");
    write_summary_file(&summaries, &lws)?;
    let (layers, dim) = read_summary_header(&lws)?;
    println!(
        "LWS1 summaries: {layers} layers of dim {dim}, {} bytes",
        std::fs::metadata(&lws).map(|m| m.len()).unwrap_or(0)
    );
    // a single layer is read by seeking, without loading the rest
    let second = read_summary_layer(&lws, 1)?;
    println!("layer 1: count={} mean={:?}", second.count, second.mean);
    Ok(())
}
