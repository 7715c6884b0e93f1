from django.apps import AppConfig


class AdaptiveGreedyAppConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "adaptive_greedy_app"
    verbose_name = "Adaptive greedy experiments"
