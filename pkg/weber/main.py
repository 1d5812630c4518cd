"""Entry point for the Weber solver HTTP API."""
from weber import create_app
from weber.config import DEBUG

app = create_app()

if __name__ == '__main__':
    app.run(host='0.0.0.0', port=5000, debug=DEBUG)
