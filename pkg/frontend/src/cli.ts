/**
 * CLI: render --csv <path> [--csv <path> ...] --kind <k> --out <img>
 *             [--dump-points] [--labels key=Label,key2=Label2]
 *
 * Writes an SVG figure; with --dump-points also prints the plotted
 * decoder,x,y triples (raw CSV tokens, input order) to stdout.
 */

import { writeFileSync } from 'fs';
import { pathToFileURL } from 'url';

import { CsvError } from './csv.js';
import { FIGURE_KINDS, FigureKind, LabelMap } from './series.js';
import { renderFromFiles } from './render.js';

interface Args {
  csv: string[];
  kind: FigureKind;
  out: string | null;
  dumpPoints: boolean;
  labels: LabelMap;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'render') {
    throw new CsvError(`unknown command '${argv[0] ?? ''}': expected 'render'`);
  }
  const args: Args = { csv: [], kind: 'ber-curve', out: null, dumpPoints: false, labels: {} };
  let kindSeen = false;
  for (let i = 1; i < argv.length; i += 1) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new CsvError(`flag ${flag} needs a value`);
      }
      return argv[i];
    };
    switch (flag) {
      case '--csv':
        args.csv.push(next());
        break;
      case '--kind': {
        const kind = next();
        if (!FIGURE_KINDS.includes(kind as FigureKind)) {
          throw new CsvError(`unknown figure kind '${kind}' (choose from ${FIGURE_KINDS.join(', ')})`);
        }
        args.kind = kind as FigureKind;
        kindSeen = true;
        break;
      }
      case '--out':
        args.out = next();
        break;
      case '--dump-points':
        args.dumpPoints = true;
        break;
      case '--labels':
        for (const pair of next().split(',')) {
          const eq = pair.indexOf('=');
          if (eq < 0) {
            throw new CsvError(`label '${pair}' is not key=value`);
          }
          args.labels[pair.slice(0, eq)] = pair.slice(eq + 1);
        }
        break;
      default:
        throw new CsvError(`unknown flag '${flag}'`);
    }
  }
  if (args.csv.length === 0) {
    throw new CsvError('at least one --csv is required');
  }
  if (!kindSeen) {
    throw new CsvError('--kind is required');
  }
  if (args.out === null && !args.dumpPoints) {
    throw new CsvError('--out is required unless --dump-points is given');
  }
  return args;
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const result = renderFromFiles(args.csv, args.kind, args.labels);
    if (args.out !== null) {
      writeFileSync(args.out, result.svg);
    }
    if (args.dumpPoints) {
      process.stdout.write(result.points);
    }
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(run(process.argv.slice(2)));
}
