from typing import ClassVar

from pydantic import BaseModel, ConfigDict

from quicksim import util


class Model(BaseModel):
    """Immutable value object with a stable line-oriented text form."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Names rendered by to_record, in order; fields or properties. Empty means every field.
    record_fields: ClassVar[tuple[str, ...]] = ()

    def to_dict(self) -> dict:
        """Returns the model properties as a dict

        :rtype: dict
        """
        return self.model_dump(mode="json")

    def to_record_dict(self) -> dict:
        """Returns the record fields in order, properties included."""
        data = self.to_dict()
        names = self.record_fields or tuple(data)
        return {name: data[name] if name in data else getattr(self, name) for name in names}

    def to_record(self) -> str:
        """Returns the ``key=value`` record for reports and CI diffing."""
        return util.format_record(self.to_record_dict())
