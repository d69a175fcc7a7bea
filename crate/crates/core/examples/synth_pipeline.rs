// The command-line pipeline driven in-process: synth, then
// train → sweep → label → balance → evaluate, artifacts in a temp dir.
//
// $ cargo run --release --example synth_pipeline

use std::io;

fn run(args: &[&str]) {
    let code = specqa::cli::run(args.iter().copied(), &mut io::stdout(), &mut io::stderr());
    assert_eq!(code, 0, "{args:?}");
}

fn main() -> io::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).display().to_string();
    std::fs::write(path("run.conf"), "dim = 100\nmode = out-out\nepochs = 20\n")?;

    run(&["specqa", "synth", "--out", &path("catalog.jsonl"), "--train-out", &path("train.jsonl"),
        "--test-out", &path("test.jsonl"), "--validation-out", &path("validation.tsv")]);
    run(&["specqa", "pipeline", "--catalog", &path("train.jsonl"), "--validation", &path("validation.tsv"),
        "--config", &path("run.conf"), "--eval-catalog", &path("test.jsonl"), "--out-dir", &path("out")]);

    for entry in std::fs::read_dir(dir.path().join("out"))? {
        let entry = entry?;
        println!("{:<24} {:>9} bytes", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }
    print!("{}", std::fs::read_to_string(dir.path().join("out/manifest.txt"))?);
    Ok(())
}
