import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "flagforge.settings")
django.setup()
