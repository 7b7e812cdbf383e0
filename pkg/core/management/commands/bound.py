"""
Flagforge — Evaluate one incidence or flag bound.
Run: python manage.py bound st --arg m=1000 --arg n=1000
     python manage.py bound flags3d-restricted --arg p=4096 --arg l=4096 --arg s=4096 --arg b=16
"""

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.services.bounds import BOUNDS, evaluate
from core.services.codec import BOUND_COLUMNS, write_bound_csv
from core.utils.validation import parse_assignments
from core.validators import validate_bound_arguments


class Command(BaseCommand):
    help = (
        'Evaluate a bound and print one CSV row with columns '
        f'{",".join(BOUND_COLUMNS)}. List arguments (sizes, sigma) are comma-separated.'
    )

    def add_arguments(self, parser):
        parser.add_argument('bound_id', choices=sorted(BOUNDS))
        parser.add_argument('--arg', action='append', default=[], metavar='NAME=VALUE',
                            help='Bound input, repeatable (m, n, b, p, l, s, sizes, sigma)')

    def handle(self, *args, **options):
        bound_id = options['bound_id']
        try:
            raw = parse_assignments(options['arg'], field_name='argument')
            arguments = validate_bound_arguments(bound_id, raw)
            value = evaluate(bound_id, arguments)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages)) from exc
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        write_bound_csv([(bound_id, raw, value)], self.stdout)
