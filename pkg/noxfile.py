import nox


@nox.session(reuse_venv=True)
@nox.parametrize("numpy", ["1.26.4", "2.0.2"])
def tests(session, numpy):
    session.install(f"numpy=={numpy}")
    session.run("poetry", "run", "pytest", *session.posargs, external=True)
