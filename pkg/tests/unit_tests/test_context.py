from ocal.context import Context


def test_context_init() -> None:
    context = Context(workers=3)
    assert context.workers == 3


def test_context_init_with_env_vars(monkeypatch) -> None:
    monkeypatch.setenv("OCAL_WORKERS", "4")
    monkeypatch.setenv("OCAL_AUDIT", "true")
    monkeypatch.setenv("OCAL_KKT_TOL", "1e-8")
    context = Context()
    assert context.workers == 4
    assert context.audit is True
    assert context.kkt_tol == 1e-8


def test_context_init_with_env_vars_and_passed_values(monkeypatch) -> None:
    monkeypatch.setenv("OCAL_WORKERS", "4")
    context = Context(workers=2)
    assert context.workers == 2


def test_context_defaults() -> None:
    context = Context()
    assert context.results_dir == "results"
    assert context.audit is False
