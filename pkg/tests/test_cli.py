import pytest

from stokesdarcy.cli import main, read_config


def test_converge_csv_contract(tmp_path):
    out = tmp_path / "table.csv"
    code = main(["converge", "--pair", "mini-bdm1", "--nmin", "8",
                 "--nmax", "16", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0] == ("DOF,h,e(u_S),r(u_S),e(p_S),r(p_S),"
                        "e(u_D),r(u_D),e(p_D),r(p_D)")
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "543" and first[1] == "1/8"
    # rates blank on the first row, scientific notation with 3 digits
    assert first[3] == "-"
    assert "e+" in first[2] or "e-" in first[2]
    second = lines[2].split(",")
    assert second[3] != "-"
    assert float(second[3]) == pytest.approx(0.88, abs=0.05)


def test_iterations_single_combo_column(tmp_path):
    out = tmp_path / "iters.csv"
    code = main(["iterations", "--pair", "mini-bdm1", "--nmin", "8",
                 "--nmax", "8", "--combo", "direct:pd0", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].count(",") == 2  # DOF, h, one data column
    cell = lines[1].split(",")[2]
    assert cell.startswith('"') and cell.endswith('"')
    inner = cell.strip('"')
    outer, bracket = inner.split("(")
    assert int(outer) > 0 and int(bracket.rstrip(")")) > 0


def test_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["converge", "--pair", "p2isop1-bdm1", "--nmin", "8",
                     "--nmax", "8", "--seed", "3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_markdown_format(tmp_path):
    out = tmp_path / "t.md"
    main(["iterations", "--pair", "mini-bdm1", "--nmin", "8", "--nmax", "8",
          "--format", "markdown", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].startswith("| DOF |")
    assert set(lines[1].replace("|", "")) <= {"-"}


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("pair = p2isop1-bdm1\n"
                   "nmin = 8\n"
                   "nmax = 8\n"
                   "# a comment\n"
                   "combo = direct:pd0\n"
                   "combo = direct:hx\n")
    parsed = read_config(cfg)
    assert parsed["combo"] == ["direct:pd0", "direct:hx"]
    out = tmp_path / "from_config.csv"
    assert main(["iterations", "--config", str(cfg),
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].count(",") == 3  # two combo columns from the file
    assert lines[1].split(",")[0] == "385"
    # flags override the file
    out2 = tmp_path / "override.csv"
    assert main(["iterations", "--config", str(cfg), "--combo",
                 "direct:pd0", "--out", str(out2)]) == 0
    assert out2.read_text().splitlines()[0].count(",") == 2


def test_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("STOKESDARCY_OUTDIR", str(tmp_path))
    assert main(["converge", "--pair", "mini-bdm1", "--nmin", "8",
                 "--nmax", "8", "--out", "rel.csv"]) == 0
    assert (tmp_path / "rel.csv").exists()


def test_check_verb():
    assert main(["check"]) == 0


def test_oracle_verb():
    assert main(["oracle", "--pair", "mini-bdm1"]) == 0


def test_failure_marker_and_exit_code(tmp_path, monkeypatch):
    import stokesdarcy.cli as cli

    class FailedReport:
        converged = False
        outer_iterations = 0
        mean_inner = 0.0

    monkeypatch.setattr(cli, "solve_coupled",
                        lambda problem, config: FailedReport())
    out = tmp_path / "fail.csv"
    code = main(["iterations", "--pair", "mini-bdm1", "--nmin", "8",
                 "--nmax", "8", "--out", str(out)])
    assert code == 1
    assert "FAILED" in out.read_text()
