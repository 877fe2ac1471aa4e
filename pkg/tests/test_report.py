from stochmatch import __version__
from stochmatch.report import Report, config_hash


def test_render_layout():
    report = Report.for_config(["a", "b"], {"seed": 3, "trials": 10, "out": "x.csv"})
    report.add(1, 0.1)
    report.add("z", True)
    lines = report.render().splitlines()
    assert lines[0] == "# seed=3"
    assert lines[1] == f"# version={__version__}"
    assert lines[2].startswith("# config_hash=")
    assert lines[3] == "# trials=10"
    assert lines[4:] == ["a,b", "1,0.1", "z,1"]


def test_hash_ignores_output_and_workers():
    base = {"seed": 0, "trials": 5, "n_list": [1, 2]}
    assert config_hash(base) == config_hash({**base, "out": "a.csv", "workers": 8})
    assert config_hash(base) != config_hash({**base, "seed": 1})


def test_identical_configs_render_identically():
    def build():
        report = Report.for_config(["x"], {"seed": 1, "trials": 2})
        report.add(1 / 3)
        return report.render()

    assert build() == build()


def test_footer():
    report = Report(columns=["x"])
    report.footer.update(min_ratio="0.5")
    assert report.render().splitlines()[-1] == "# min_ratio=0.5"


def test_write_file(tmp_path):
    report = Report(columns=["x"], rows=[[1]])
    path = tmp_path / "out.csv"
    report.write(path)
    assert path.read_text() == "x\n1\n"
