"""
命令行测试

测试范围：
- 子命令解析与退出码（0 成功，1 失败，2 参数错误）
- JSON 报告结构与确定性
- 输入文件读取与诊断 JSON
- 文本输出与耗时开关
"""

import json

import pytest

from chylab.cli import build_parser, main


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture
def four_point_file(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"n": 4, "X": {"1,3": 2, "2,4": 3}}))
    return path


class TestParser:
    """测试参数解析"""

    def test_requires_command(self):
        """测试缺少子命令"""
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([])
        assert exc.value.code == 2

    def test_unknown_kind(self):
        """测试非法选项退出码为 2"""
        with pytest.raises(SystemExit) as exc:
            main(["amplitude", "bogus"])
        assert exc.value.code == 2

    def test_defaults(self):
        """测试默认参数"""
        args = build_parser().parse_args(["solve"])
        assert args.n == 6
        assert args.seed == 0
        assert not args.json


class TestKinematics:
    """测试 kinematics gen"""

    def test_report(self, capsys):
        """测试报告结构"""
        code, report = run_json(capsys, "kinematics", "gen", "--n", "5", "--seed", "3")
        assert code == 0
        assert report["command"] == "kinematics gen"
        assert report["results"]["planar"]["n"] == 5
        assert len(report["results"]["mandelstam"]["s"]) == 5
        assert report["timings"] == {}
        assert report["config"]["seed"] == 3

    def test_deterministic(self, capsys):
        """测试相同参数输出逐字节相同"""
        main(["kinematics", "gen", "--n", "6", "--seed", "4", "--json"])
        first = capsys.readouterr().out
        main(["kinematics", "gen", "--n", "6", "--seed", "4", "--json"])
        assert capsys.readouterr().out == first


class TestSolve:
    """测试 solve"""

    def test_random(self, capsys):
        """测试随机运动学的解数"""
        code, report = run_json(capsys, "solve", "--n", "5", "--seed", "1")
        assert code == 0
        assert report["passed"] == {"complete": True}
        assert len(report["results"]["solutions"]) == 2

    def test_from_file(self, capsys, tmp_path):
        """测试从文件读取 Mandelstam"""
        path = tmp_path / "s.json"
        path.write_text(json.dumps({"n": 4, "s": [[0, 2, -5, 3], [2, 0, 3, -5], [-5, 3, 0, 2], [3, -5, 2, 0]]}))
        code, report = run_json(capsys, "solve", "--s-file", str(path))
        assert code == 0
        assert report["results"]["solutions"][0][0] == pytest.approx([2.5, 0.0])

    def test_missing_file(self, capsys, tmp_path):
        """测试文件不存在时输出诊断 JSON"""
        code, report = run_json(capsys, "solve", "--s-file", str(tmp_path / "none.json"))
        assert code == 1
        assert report["error"] == "invalid_input"

    def test_malformed_file(self, capsys, tmp_path):
        """测试文件格式错误"""
        path = tmp_path / "s.json"
        path.write_text('{"n": 4, "s": [[0]]}')
        code, report = run_json(capsys, "solve", "--s-file", str(path))
        assert code == 1
        assert report["error"] == "invalid_input"

    def test_non_generic_file(self, capsys, tmp_path):
        """测试 s13 = 0 的运动学输出 non_generic 诊断"""
        path = tmp_path / "s.json"
        path.write_text(json.dumps({"n": 4, "s": [[0, 7, 0, -7], [7, 0, -7, 0], [0, -7, 0, 7], [-7, 0, 7, 0]]}))
        code, report = run_json(capsys, "solve", "--s-file", str(path))
        assert code == 1
        assert report["error"] == "non_generic"


class TestAmplitude:
    """测试 amplitude"""

    def test_feynman_exact(self, capsys, four_point_file):
        """测试精确 Feynman 求和输出有理数"""
        code, report = run_json(capsys, "amplitude", "feynman", "--x-file", str(four_point_file))
        assert code == 0
        assert report["results"]["feynman"] == "5/6"

    def test_chy(self, capsys, four_point_file):
        """测试 CHY 求和"""
        code, report = run_json(capsys, "amplitude", "chy", "--x-file", str(four_point_file))
        assert code == 0
        assert report["results"]["chy"] == pytest.approx([-5 / 6, 0.0])

    def test_compare(self, capsys):
        """测试 CHY 与 Feynman 比较"""
        code, report = run_json(capsys, "amplitude", "compare", "--n", "5", "--trials", "2")
        assert code == 0
        assert report["passed"]["agree"] is True

    def test_failed_criterion(self, capsys):
        """测试判据未通过时退出码为 1"""
        code, report = run_json(capsys, "amplitude", "compare", "--n", "5", "--trials", "1", "--tol", "0")
        assert code == 1
        assert report["passed"]["agree"] is False

    def test_partial(self, capsys):
        """测试偏振幅：带符号比较且 CHY 值为实数"""
        code, report = run_json(capsys, "amplitude", "partial", "--n", "5", "--alpha", "1,3,2,4,5")
        assert code == 0
        assert report["results"]["alpha"] == [1, 3, 2, 4, 5]
        assert report["results"]["sign"] in (1, -1)
        assert report["passed"] == {"agree": True, "real": True}

    def test_partial_needs_alpha(self, capsys):
        """测试缺少 --alpha"""
        code, report = run_json(capsys, "amplitude", "partial", "--n", "5")
        assert code == 1
        assert report["error"] == "invalid_input"

    def test_bad_ordering(self, capsys):
        """测试排序不是排列"""
        code, report = run_json(capsys, "amplitude", "partial", "--n", "5", "--alpha", "1,1,2,3,4")
        assert code == 1
        assert report["error"] == "invalid_input"


class TestChecks:
    """测试各检查子命令"""

    def test_uequations(self, capsys):
        """测试 u 方程检查"""
        code, report = run_json(capsys, "uequations", "check", "--n", "6", "--samples", "5")
        assert code == 0
        assert report["passed"] == {"residual": True, "unit_interval": True}

    def test_binary(self, capsys):
        """测试二元几何检查"""
        code, report = run_json(capsys, "binary", "check", "--name", "square", "--samples", "2")
        assert code == 0
        assert report["passed"]["flag"] is True
        assert len(report["results"]["witnesses"]) == 2

    def test_trop(self, capsys):
        """测试热带振幅精确相等"""
        code, report = run_json(capsys, "trop", "amplitude", "--n", "5", "--seed", "2")
        assert code == 0
        assert report["results"]["laplace"] == report["results"]["feynman"]

    def test_scatform(self, capsys):
        """测试拉回比较"""
        code, report = run_json(capsys, "scatform", "pullback", "--n", "5", "--trials", "3")
        assert code == 0
        assert report["passed"]["matches"] is True

    def test_scatmap(self, capsys):
        """测试散射映射检查"""
        code, report = run_json(capsys, "scatmap", "check", "--n", "5", "--samples", "20")
        assert code == 0
        assert report["passed"] == {"positive": True, "boundary": True, "injective": True}

    def test_string_eval(self, capsys, four_point_file):
        """测试四点弦积分与闭式比较"""
        code, report = run_json(
            capsys, "string", "eval", "--x-file", str(four_point_file), "--alpha", "0.5"
        )
        assert code == 0
        results = report["results"]
        assert results["value"] == pytest.approx(results["closed_form"], rel=1e-6)

    def test_string_ftlimit(self, capsys, four_point_file):
        """测试场论极限"""
        code, report = run_json(capsys, "string", "ftlimit", "--x-file", str(four_point_file))
        assert code == 0
        assert report["results"]["limit"] == pytest.approx(5 / 6, abs=1e-3)

    def test_mhv(self, capsys):
        """测试 MHV 恒等式"""
        code, report = run_json(capsys, "mhv", "check", "--n", "5", "--seed", "3")
        assert code == 0
        assert set(report["passed"]) == {"conservation", "u1_decoupling", "kk_identity"}

    def test_mhv_four_point(self, capsys):
        """测试四点 MHV 与 anti-MHV 一致"""
        code, report = run_json(capsys, "mhv", "check", "--n", "4", "--seed", "3")
        assert code == 0
        assert set(report["passed"]) == {"conservation", "u1_decoupling", "four_point_duality"}
        assert report["results"]["four_point_duality"] < 1e-10

    def test_sectors(self, capsys):
        """测试扇区计数"""
        code, report = run_json(capsys, "sectors", "census", "--n", "5", "--trials", "1")
        assert code == 0
        assert report["results"]["counts"] == [[1, 1]]

    def test_sectors_out_of_range(self, capsys):
        """测试不支持的 n"""
        code, report = run_json(capsys, "sectors", "census", "--n", "9", "--trials", "1")
        assert code == 1
        assert report["error"] == "invalid_input"


class TestOutput:
    """测试输出格式"""

    def test_text(self, capsys):
        """测试文本输出"""
        assert main(["uequations", "check", "--n", "5", "--samples", "2"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("command: uequations check")
        assert "residual: PASS" in out

    def test_timings(self, capsys):
        """测试 --timings 附带耗时"""
        code, report = run_json(capsys, "uequations", "check", "--n", "5", "--samples", "2", "--timings")
        assert code == 0
        assert "uequations_check" in report["timings"]

    def test_json_digits(self, capsys, monkeypatch):
        """测试 CHYLAB_JSON_DIGITS 控制有效位数"""
        monkeypatch.setenv("CHYLAB_JSON_DIGITS", "3")
        code, report = run_json(capsys, "amplitude", "chy", "--n", "4", "--seed", "1")
        assert code == 0
        real = report["results"]["chy"][0]
        assert real == float(f"{real:.3g}")


@pytest.mark.slow
def test_accept_quick(capsys):
    """测试快速验收全部通过"""
    code, report = run_json(capsys, "accept", "--quick", "--trials", "5")
    assert code == 0
    assert all(report["passed"].values())
