def test_integrate_mutation(run_query):
    """Test integrating through the GraphQL API records every round"""
    query = """
    mutation {
      integrate(input: {expression: "exp(x)", tol: 1e-6, seed: 3}) {
        id
        mode
        expression
        domain
        status
        converged
        value
        errEstimate
        exitCode
        finishedAt
        rounds {
          refinement
          items
        }
      }
    }
    """

    data = run_query(query)

    assert "errors" not in data
    computation = data["data"]["integrate"]
    assert computation["mode"] == "integrate"
    assert computation["domain"] == [0.0, 1.0]
    assert computation["status"] == "converged"
    assert computation["converged"] is True
    assert abs(computation["value"] - 1.718281828459045) < 1e-5
    assert computation["exitCode"] == 0
    assert computation["finishedAt"] is not None
    assert [r["refinement"] for r in computation["rounds"]] == list(
        range(len(computation["rounds"]))
    )


def test_failed_integration_is_recorded(run_query, failed):
    """Test that a non-integrable request is stored with its detail"""
    query = f"""
    query {{
      computation(id: "{failed['id']}") {{
        status
        value
        exitCode
        detail
      }}
    }}
    """

    computation = run_query(query)["data"]["computation"]

    assert failed["status"] == "nonintegrable"
    assert computation["value"] is None
    assert computation["exitCode"] == 2
    assert computation["detail"]


def test_computations_query(run_query, integrated, failed):
    """Test listing computations, optionally by status"""
    everything = run_query("query { computations { id } }")
    converged = run_query('query { computations(status: "converged") { id } }')

    assert [c["id"] for c in everything["data"]["computations"]] == [
        integrated["id"],
        failed["id"],
    ]
    assert [c["id"] for c in converged["data"]["computations"]] == [integrated["id"]]


def test_unknown_computation(run_query):
    """Test that an unknown id resolves to null"""
    query = 'query { computation(id: "00000000-0000-0000-0000-000000000000") { id } }'

    assert run_query(query)["data"]["computation"] is None


def test_integrate_rejects_other_modes(run_query):
    """Test that check and variation are not integration modes"""
    query = """
    mutation {
      integrate(input: {expression: "x", mode: "check"}) { id }
    }
    """

    data = run_query(query)

    assert "errors" in data


def test_integrate_rejects_bad_expression(run_query):
    """Test that a parse error surfaces as a GraphQL error"""
    query = """
    mutation {
      integrate(input: {expression: "x +"}) { id }
    }
    """

    data = run_query(query)

    assert "errors" in data
    assert "position 3" in data["errors"][0]["message"]


def test_variation_mutation(run_query):
    """Test bracketing a variation through the GraphQL API"""
    query = """
    mutation {
      variation(expression: "x^2", domain: [0.0, 1.0], tol: 1e-4) {
        mode
        status
        value
      }
    }
    """

    computation = run_query(query)["data"]["variation"]

    assert computation["mode"] == "variation"
    assert computation["status"] == "bounded"
    assert abs(computation["value"] - 1 / 3) < 1e-2


def test_run_check_mutation(run_query):
    """Test running a subset of the check suite through the GraphQL API"""
    query = """
    mutation {
      runCheck(checks: ["henstock"]) {
        passed
        failed
        skipped
        rows {
          check
          entry
          verdict
        }
        computation {
          mode
          status
        }
      }
    }
    """

    data = run_query(query)

    assert "errors" not in data
    report = data["data"]["runCheck"]
    assert report["failed"] == 0
    assert report["passed"] == len(report["rows"]) == 3
    assert {row["check"] for row in report["rows"]} == {"henstock"}
    assert report["computation"] == {"mode": "check", "status": "passed"}
