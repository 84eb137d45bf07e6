"""The fixed characteristic/property taxonomy.

Five inherent quality characteristics, fifteen measurable properties. Every
property belongs to exactly one characteristic; the mapping is closed and not
extensible at runtime (rule documents may only use these names).
"""

from __future__ import annotations

import enum


class Characteristic(enum.Enum):
    ACCURACY = "Accuracy"
    COMPLETENESS = "Completeness"
    CONSISTENCY = "Consistency"
    CREDIBILITY = "Credibility"
    CURRENTNESS = "Currentness"

    def __str__(self) -> str:
        return self.value


class Property(enum.Enum):
    # Accuracy
    EXAC_SINT = "EXAC_SINT"
    EXAC_SEMAN = "EXAC_SEMAN"
    RAN_EXAC = "RAN_EXAC"
    # Completeness
    COMP_FICH = "COMP_FICH"
    COMP_REG = "COMP_REG"
    COMP_VAL_ESP = "COMP_VAL_ESP"
    FAL_COMP_FICH = "FAL_COMP_FICH"
    # Consistency
    CONS_FORM = "CONS_FORM"
    CONS_SEMAN = "CONS_SEMAN"
    INT_REF = "INT_REF"
    RIES_INCO = "RIES_INCO"
    # Credibility
    CRED_FUEN = "CRED_FUEN"
    CRED_VAL_DAT = "CRED_VAL_DAT"
    # Currentness
    CONV_ACT = "CONV_ACT"
    FREC_ACT = "FREC_ACT"

    def __str__(self) -> str:
        return self.value

    @property
    def characteristic(self) -> Characteristic:
        return PROPERTY_CHARACTERISTIC[self]

    @property
    def display_name(self) -> str:
        return PROPERTY_NAMES[self]


PROPERTY_CHARACTERISTIC: dict[Property, Characteristic] = {
    Property.EXAC_SINT: Characteristic.ACCURACY,
    Property.EXAC_SEMAN: Characteristic.ACCURACY,
    Property.RAN_EXAC: Characteristic.ACCURACY,
    Property.COMP_FICH: Characteristic.COMPLETENESS,
    Property.COMP_REG: Characteristic.COMPLETENESS,
    Property.COMP_VAL_ESP: Characteristic.COMPLETENESS,
    Property.FAL_COMP_FICH: Characteristic.COMPLETENESS,
    Property.CONS_FORM: Characteristic.CONSISTENCY,
    Property.CONS_SEMAN: Characteristic.CONSISTENCY,
    Property.INT_REF: Characteristic.CONSISTENCY,
    Property.RIES_INCO: Characteristic.CONSISTENCY,
    Property.CRED_FUEN: Characteristic.CREDIBILITY,
    Property.CRED_VAL_DAT: Characteristic.CREDIBILITY,
    Property.CONV_ACT: Characteristic.CURRENTNESS,
    Property.FREC_ACT: Characteristic.CURRENTNESS,
}

PROPERTY_NAMES: dict[Property, str] = {
    Property.EXAC_SINT: "Syntactic Accuracy",
    Property.EXAC_SEMAN: "Semantic Accuracy",
    Property.RAN_EXAC: "Accuracy Range",
    Property.COMP_FICH: "File Completeness",
    Property.COMP_REG: "Record Completeness",
    Property.COMP_VAL_ESP: "Value Completeness",
    Property.FAL_COMP_FICH: "False File Completeness",
    Property.CONS_FORM: "Format Consistency",
    Property.CONS_SEMAN: "Semantic Consistency",
    Property.INT_REF: "Referential Integrity",
    Property.RIES_INCO: "Inconsistency Risk",
    Property.CRED_FUEN: "Source Credibility",
    Property.CRED_VAL_DAT: "Data Values Credibility",
    Property.CONV_ACT: "Timeliness of Update",
    Property.FREC_ACT: "Update Frequency",
}


def properties_of(characteristic: Characteristic) -> list[Property]:
    """All taxonomy properties of one characteristic, in declaration order."""
    return [p for p in Property if PROPERTY_CHARACTERISTIC[p] is characteristic]


def parse_characteristic(name: str) -> Characteristic:
    for c in Characteristic:
        if c.value == name:
            return c
    raise ValueError(f"unknown characteristic {name!r}; expected one of "
                     + ", ".join(c.value for c in Characteristic))


def parse_property(acronym: str) -> Property:
    try:
        return Property(acronym)
    except ValueError:
        raise ValueError(f"unknown property acronym {acronym!r}; expected one of "
                         + ", ".join(p.value for p in Property)) from None
