"""
Flagforge — Self-checks: oracle agreement, exponent grammar, split identity,
duality, Legendrian identities, sections, constructions.
Run: python manage.py verify [--scope oracle --scope duality] [--seed 7]

Exits with status 1 when any suite fails.
"""

from django.core.management.base import BaseCommand, CommandError

from core.conf import default_seed
from core.services.experiments import SUITES, verify_suite


class Command(BaseCommand):
    help = f'Run verification suites ({", ".join(SUITES)}); all by default.'

    def add_arguments(self, parser):
        parser.add_argument('--scope', action='append', choices=list(SUITES), default=None,
                            help='Suite to run, repeatable')
        parser.add_argument('--seed', type=int, default=None, help='Seed (default: FLAGFORGE_SEED)')
        parser.add_argument('--instances', type=int, default=50, help='Random instances per suite (default: 50)')

    def handle(self, *args, **options):
        seed = options['seed'] if options['seed'] is not None else default_seed()
        report = verify_suite(options['scope'], seed=seed, instances=max(1, options['instances']))
        for result in report.results:
            if result.passed:
                self.stdout.write(self.style.SUCCESS(f'{result.name}: ok ({result.checked} checks)'))
                continue
            self.stdout.write(self.style.ERROR(f'{result.name}: FAILED ({len(result.failures)} failure(s))'))
            for failure in result.failures:
                self.stdout.write(f'  {failure}')
        if not report.passed:
            raise CommandError('verification failed')
