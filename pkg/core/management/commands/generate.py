"""
Flagforge — Build a construction and write it to disk.
Run: python manage.py generate --kind grid --param k=4 --param l=2 --out grid.json

Writes the layered family as JSON and the construction's predicted counts to
<out stem>.predicted.json next to it.
"""

from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.conf import default_seed
from core.exceptions import FlagforgeError
from core.services.codec import dump_family, dump_predicted
from core.services.constructions import ConstructionSpec, build
from core.services.log_service import Category, log_event
from core.validators import CONSTRUCTION_PARAMETERS, parse_construction_arguments


class Command(BaseCommand):
    help = (
        'Build a construction (elekes, grid, bundle, lift, flag-lower-bound, lightlike, '
        'legendrian, random, copies) and write it as a layered-family JSON file.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--kind', required=True, choices=sorted(CONSTRUCTION_PARAMETERS))
        parser.add_argument(
            '--param',
            action='append',
            default=[],
            metavar='NAME=VALUE',
            help='Construction parameter, repeatable (e.g. --param k=4 --param l=2, --param sizes=4,9,16).',
        )
        parser.add_argument('--seed', type=int, default=None, help='Seed (default: FLAGFORGE_SEED)')
        parser.add_argument('--out', required=True, help='Path of the family JSON file to write')

    def handle(self, *args, **options):
        kind = options['kind']
        seed = options['seed'] if options['seed'] is not None else default_seed()
        try:
            parameters = parse_construction_arguments(kind, options['param'])
            instance = build(ConstructionSpec(kind, parameters), seed)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages)) from exc
        except FlagforgeError as exc:
            raise CommandError(str(exc)) from exc

        out = Path(options['out'])
        dump_family(instance.family, out, kind=kind, parameters=parameters, seed=instance.seed)
        predicted_path = out.with_name(f'{out.stem}.predicted.json')
        dump_predicted(instance.predicted, predicted_path, kind=kind, seed=instance.seed)
        log_event('INFO', Category.CLI, 'family written', kind=kind, path=out, sizes=instance.family.sizes)
        self.stdout.write(
            self.style.SUCCESS(f'Wrote {kind} family with sizes {list(instance.family.sizes)} to {out}')
        )
