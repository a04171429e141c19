import pytest


@pytest.fixture
def run_query(client):
    def run(query: str) -> dict:
        response = client.post("/graphql", json={"query": query})
        assert response.status_code == 200
        return response.json()

    return run


@pytest.fixture
def integrated(run_query) -> dict:
    integrate_mutation = """
    mutation {
      integrate(input: {
        expression: "x^2",
        domain: [0.0, 1.0],
        tol: 1e-6
      }) {
        id
        status
        value
      }
    }
    """
    data = run_query(integrate_mutation)
    assert "errors" not in data
    return data["data"]["integrate"]


@pytest.fixture
def failed(run_query) -> dict:
    improper_mutation = """
    mutation {
      integrate(input: {
        expression: "1/x",
        mode: "improper",
        domain: [-1.0, 1.0],
        singular: [0.0],
        tol: 1e-6
      }) {
        id
        status
      }
    }
    """
    data = run_query(improper_mutation)
    assert "errors" not in data
    return data["data"]["integrate"]
