"""Domain types, enums and errors."""