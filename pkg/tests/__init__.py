# https://docs.pytest.org/en/latest/goodpractices.html#tests-outside-application-code
