//! Sliding-window chunker over whitespace tokens.
//!
//! Tokenization is whitespace-based so the segmentation is reproducible
//! across providers. Windows advance by `chunk_size - overlap`; a new
//! window is only started while some token remains uncovered, so every
//! trailing chunk is longer than the overlap and no chunk is empty.

use super::{Chunk, Document, IngestError, TokenSpan};

pub const DEFAULT_CHUNK_SIZE: usize = 300;
pub const DEFAULT_OVERLAP: usize = 50;

/// Split `doc` into overlapping chunks. Chunk `i` spans
/// `[i*stride, min(i*stride + chunk_size, n_tokens))` with
/// `stride = chunk_size - overlap`; the final chunk may be shorter.
/// An empty document yields an empty list.
pub fn chunk_document(
    doc: &Document,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, IngestError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(IngestError::InvalidChunking { chunk_size, overlap });
    }
    let tokens: Vec<&str> = doc.text.split_whitespace().collect();
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let stride = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + chunk_size).min(tokens.len());
        chunks.push(Chunk {
            chunk_id: format!("{}.c{}", doc.doc_id, chunks.len()),
            doc_id: doc.doc_id.clone(),
            token_span: TokenSpan { start, end },
            text: tokens[start..end].join(" "),
        });
        if end == tokens.len() {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}
