use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Stdio};

struct Proc(Child);

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn redsys() -> Command {
    Command::new(env!("CARGO_BIN_EXE_redsys"))
}

fn broker(log_dir: &std::path::Path, extra: &[&str]) -> (Proc, String) {
    let mut child = redsys()
        .args(["broker", "--listen", "127.0.0.1:0", "--log-dir"])
        .arg(log_dir)
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let out = BufReader::new(child.stdout.take().unwrap());
    let mut addr = None;
    for line in out.lines() {
        let line = line.unwrap();
        if let Some(a) = line.strip_prefix("listening ") {
            addr = Some(a.to_owned());
        }
        if line == "ready" {
            break;
        }
    }
    (Proc(child), addr.expect("address line"))
}

fn run(cmd: &mut Command) -> (bool, String) {
    let out = cmd.output().unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn scripted_edits_survive_restart_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = tmp.path().join("seed.txt");
    std::fs::write(&doc, "hello world").unwrap();
    let script = tmp.path().join("edits.script");
    std::fs::write(
        &script,
        "insert 5 \",\"\nattr 0 5 bold true\nexpectText \"hello, world\"\nexpectAttr 2 bold true\n",
    )
    .unwrap();
    let logs = tmp.path().join("logs");
    let seed = format!("d={}", doc.display());
    {
        let (_b, addr) = broker(&logs, &["--doc", &seed]);
        let (ok, out) = run(redsys().args(["client", "--connect", &addr, "--doc", "d", "--script"]).arg(&script));
        assert!(ok, "{out}");
        assert_eq!(out.trim(), "ok");
        let (ok, out) = run(redsys().args(["dump", "--connect", &addr, "--doc", "d", "--attrs"]));
        assert!(ok);
        assert_eq!(out.trim_end(), "[bold=true]hello[/], world");
    }
    let (ok, out) = run(redsys().args(["replay", "--doc", "d", "--log-dir"]).arg(&logs));
    assert!(ok);
    assert_eq!(out.trim_end(), "hello, world");

    // restored from the log; the seed file is not applied a second time
    let (_b, addr) = broker(&logs, &["--doc", &seed]);
    let (ok, out) = run(redsys().args(["dump", "--connect", &addr, "--doc", "d"]));
    assert!(ok);
    assert_eq!(out.trim_end(), "hello, world");
}

#[test]
fn failed_expectation_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("bad.script");
    std::fs::write(&script, "insert 0 \"abc\"\nexpectText \"abd\"\n").unwrap();
    let (_b, addr) = broker(&tmp.path().join("logs"), &[]);
    let out = redsys()
        .args(["client", "--create", "--connect", &addr, "--doc", "new", "--script"])
        .arg(&script)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
