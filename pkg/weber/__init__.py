"""Flask application factory for the Weber solver toolkit."""
from flask import Flask, jsonify, request

from weber.config import DEBUG, ensure_dirs, get_logger
from weber.exceptions import WeberError


def create_app(testing=False):
    """Create and configure the Flask application."""
    app = Flask(__name__)

    if testing:
        app.config['TESTING'] = True
    app.config['DEBUG'] = DEBUG and not testing
    app.json.sort_keys = False

    # Ensure directories exist
    ensure_dirs()

    # Initialize logger
    logger = get_logger()
    logger.info("app_initialized", testing=testing)

    from weber.routes import api
    app.register_blueprint(api.bp)

    _register_error_handlers(app)

    return app


def _register_error_handlers(app):
    """Register JSON error handlers for the application."""
    logger = get_logger()

    @app.errorhandler(WeberError)
    @app.errorhandler(ValueError)
    def weber_error(error):
        logger.warning("request_rejected", path=request.path, error=str(error), kind=type(error).__name__)
        return jsonify({'error': str(error), 'kind': type(error).__name__}), 400

    @app.errorhandler(400)
    def bad_request(error):
        logger.warning("bad_request", path=request.path)
        return jsonify({'error': 'Bad request'}), 400

    @app.errorhandler(404)
    def not_found(error):
        logger.warning("not_found", path=request.path)
        return jsonify({'error': 'Resource not found'}), 404

    @app.errorhandler(405)
    def method_not_allowed(error):
        logger.warning("method_not_allowed", path=request.path, method=request.method)
        return jsonify({'error': 'Method not allowed'}), 405

    @app.errorhandler(500)
    def internal_error(error):
        logger.error("internal_error", path=request.path, error=str(error))
        return jsonify({'error': 'Internal server error'}), 500
