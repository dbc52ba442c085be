use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use super::HarnessError;
use crate::trace::{format_lineage, write_trace, LineageRecord, RunLayout, Trace, TraceError};

/// Receives a run's output in generation order.
pub trait RunSink {
    fn candidate(&mut self, record: &LineageRecord, traces: &[Trace]) -> Result<(), HarnessError>;

    /// Traces of the run's best algorithm on the test instances.
    fn test_traces(&mut self, algorithm_id: &str, traces: &[Trace]) -> Result<(), HarnessError>;

    fn finish(&mut self) -> Result<(), HarnessError> {
        Ok(())
    }
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub records: Vec<LineageRecord>,
    pub traces: Vec<Vec<Trace>>,
    pub test: Option<(String, Vec<Trace>)>,
}

impl RunSink for MemorySink {
    fn candidate(&mut self, record: &LineageRecord, traces: &[Trace]) -> Result<(), HarnessError> {
        self.records.push(record.clone());
        self.traces.push(traces.to_vec());
        Ok(())
    }

    fn test_traces(&mut self, algorithm_id: &str, traces: &[Trace]) -> Result<(), HarnessError> {
        self.test = Some((algorithm_id.to_string(), traces.to_vec()));
        Ok(())
    }
}

/// Writes the run directory layout. Lineage lines are flushed as they are
/// produced, so an aborted run leaves a valid prefix on disk.
#[derive(Debug)]
pub struct DirectorySink {
    layout: RunLayout,
    variant_id: String,
    run_id: String,
    lineage: BufWriter<File>,
    lineage_path: PathBuf,
}

impl DirectorySink {
    /// Creates (or truncates) `<root>/<variant_id>/<run_id>/lineage.jsonl`.
    /// Stale trace directories of an earlier run are removed.
    pub fn create(layout: RunLayout, variant_id: &str, run_id: &str) -> Result<Self, HarnessError> {
        let dir = layout.run_dir(variant_id, run_id);
        for sub in ["traces", "test_traces"] {
            let p = dir.join(sub);
            if p.exists() {
                fs::remove_dir_all(&p).map_err(|e| TraceError::io(&p, e))?;
            }
        }
        fs::create_dir_all(&dir).map_err(|e| TraceError::io(&dir, e))?;
        let lineage_path = layout.lineage_path(variant_id, run_id);
        let file = File::create(&lineage_path).map_err(|e| TraceError::io(&lineage_path, e))?;
        Ok(DirectorySink {
            layout,
            variant_id: variant_id.to_string(),
            run_id: run_id.to_string(),
            lineage: BufWriter::new(file),
            lineage_path,
        })
    }
}

impl RunSink for DirectorySink {
    fn candidate(&mut self, record: &LineageRecord, traces: &[Trace]) -> Result<(), HarnessError> {
        for t in traces {
            let m = t.meta();
            let path = self.layout.trace_path(
                &self.variant_id,
                &self.run_id,
                &record.algorithm_id,
                &m.function_id,
                m.instance_id,
            );
            write_trace(t, &path)?;
        }
        let path = &self.lineage_path;
        let io = |e| TraceError::io(path, e);
        self.lineage
            .write_all(format_lineage(std::slice::from_ref(record)).as_bytes())
            .map_err(io)?;
        self.lineage.flush().map_err(io)?;
        Ok(())
    }

    fn test_traces(&mut self, algorithm_id: &str, traces: &[Trace]) -> Result<(), HarnessError> {
        for t in traces {
            let m = t.meta();
            let path = self.layout.test_trace_path(
                &self.variant_id,
                &self.run_id,
                algorithm_id,
                &m.function_id,
                m.instance_id,
            );
            write_trace(t, &path)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), HarnessError> {
        self.lineage
            .flush()
            .map_err(|e| TraceError::io(&self.lineage_path, e).into())
    }
}
