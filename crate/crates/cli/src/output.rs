use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination or value that clap could not catch.
    Usage(String),
    /// Problems with the input data, the numerics or the file system.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    /// A library error while handling `input`.
    pub fn data(input: impl fmt::Display, e: adasub::Error) -> Self {
        CliError::Data(format!("{input}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// An output directory whose result files may only be replaced under `--force`.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    /// Creates `dir` if needed and checks that none of `files` exists yet.
    pub fn prepare(dir: &Path, files: &[&str], force: bool) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        if !force {
            for f in files {
                let path = dir.join(f);
                if path.exists() {
                    return Err(CliError::Data(format!(
                        "{} already exists (use --force to overwrite)",
                        path.display()
                    )));
                }
            }
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn write_meta(&self, name: &str) -> CliResult<()> {
        write_meta(&self.path(name))
    }
}

/// Run metadata; the only output that varies between identical invocations.
pub fn write_meta(path: &Path) -> CliResult<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let args: Vec<String> = std::env::args().collect();
    let text = format!(
        "version = {}\ncommand = {}\nunix_time = {secs}\n",
        env!("CARGO_PKG_VERSION"),
        args.join(" ")
    );
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
