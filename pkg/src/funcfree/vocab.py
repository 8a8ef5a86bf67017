RR = "http://www.w3.org/ns/r2rml#"
RML = "http://semweb.mmlab.be/ns/rml#"
QL = "http://semweb.mmlab.be/ns/ql#"
FNML = "http://semweb.mmlab.be/ns/fnml#"
FNO = "https://w3id.org/function/ontology#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF + "type"
XSD_STRING = XSD + "string"
XSD_BOOLEAN = XSD + "boolean"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"

# Namespaces whose predicates the mapping builder must understand; anything
# else (rdfs:label, dc:creator, ...) is annotation and ignored.
STRUCTURAL_NAMESPACES = (RR, RML, FNML, FNO, QL)

DEFAULT_PREFIXES = {
    "rr": RR,
    "rml": RML,
    "ql": QL,
    "fnml": FNML,
    "fno": FNO,
    "xsd": XSD,
}
