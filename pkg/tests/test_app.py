def test_health_check(client):
    """Test the health endpoint"""
    response = client.get("/health")

    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_root_points_to_graphql(client):
    """Test the root endpoint"""
    response = client.get("/")

    assert response.status_code == 200
    assert "/graphql" in response.json()["message"]
