from django.apps import AppConfig


class CoreConfig(AppConfig):
    """
    Core app configuration. The engine is stateless: no models, no signals.
    Everything runs through the management commands (generate, count, bound,
    experiment, verify).
    """
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'core'
    verbose_name = 'Flagforge'
