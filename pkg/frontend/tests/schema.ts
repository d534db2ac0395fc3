import { readFileSync } from "node:fs";
import Ajv2020 from "ajv/dist/2020.js";

// Single source of truth shared with the Python service.
const schemaPath = new URL("../../src/mmkit/resources/service_schema.json", import.meta.url);
const schema = JSON.parse(readFileSync(schemaPath, "utf-8")) as {
  $defs: Record<string, unknown>;
};

const ajv = new Ajv2020({ strict: false });
const compiled = new Map<string, ReturnType<typeof ajv.compile>>();

export function defNames(): string[] {
  return Object.keys(schema.$defs);
}

/** Throw unless `body` validates against the named $defs entry. */
export function assertConforms(name: string, body: unknown): void {
  if (!(name in schema.$defs)) throw new Error(`unknown schema def ${name}`);
  let validate = compiled.get(name);
  if (!validate) {
    validate = ajv.compile({ $defs: schema.$defs, $ref: `#/$defs/${name}` });
    compiled.set(name, validate);
  }
  if (!validate(body)) {
    const detail = JSON.stringify(validate.errors, null, 2);
    throw new Error(`body does not conform to ${name}:\n${detail}\nbody: ${JSON.stringify(body)}`);
  }
}
